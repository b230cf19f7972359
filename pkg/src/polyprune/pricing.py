"""Discretized linear-quadratic nonlinear pricing with menu pruning.

A retailer offers contracts ``(q, p)``; a client of type ``x`` takes the offer
maximizing ``<q, x> - p`` and the retailer earns ``p - |q|^2 / 2``. The menu
design problem over client segments ``(x_k, rho_k)`` is the concave QP::

    maximize    sum_k rho_k (p_k - |q_k|^2 / 2)
    subject to  <q_k, x_k> - p_k >= <r, x_k>                (participation)
                q_k in Q                                   (availability box)
                <q_k, x_k> - p_k >= <q_l, x_k> - p_l        (incentive compatibility)

After solving, the menu is pruned to a budget and the outside option
``(r, 0)`` is appended so that every client can still reach the reserve utility.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import pga_prune, pgd_prune
from .kcenter import greedy_kcenter
from .polyfunc import Box, MaxAffine, SampleCloud
from .redundancy import prune_redundant

__all__ = [
    "ClientPopulation",
    "Menu",
    "SolveReport",
    "PricingError",
    "PricingConfig",
    "PRICING_METHODS",
    "RESULT_FIELDS",
    "generate_clients",
    "load_clients",
    "save_clients",
    "clients_csv",
    "solve_rochet_chone",
    "constraint_violation",
    "kkt_residual",
    "prune_menu",
    "evaluate_revenue",
    "batch_experiment",
    "results_csv",
]

PRICING_METHODS = ("kcenter", "kcenter-lp", "pga", "pgd")
RESULT_FIELDS = ["dim", "batch", "method", "budget", "ratio", "seconds"]
FEAS_TOL = 1e-6
KKT_TOL = 1e-4


class PricingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClientPopulation:
    """Client types ``x_i`` (rows of ``types``) with weights summing to one."""

    types: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        X = np.array(self.types, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise ValueError("types must be a nonempty (N, d) array")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != X.shape[0]:
            raise ValueError("one weight per client is required")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(w))):
            raise ValueError("client data must be finite")
        if np.any(w <= 0):
            raise ValueError("client weights must be positive")
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            w = w / total
        X.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "types", X)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.types.shape[1]

    def __len__(self) -> int:
        return self.types.shape[0]

    def subset(self, idx) -> "ClientPopulation":
        idx = np.asarray(idx)
        return ClientPopulation(self.types[idx], self.weights[idx])

    def cloud(self) -> SampleCloud:
        return SampleCloud(self.types, self.weights)

    def bounding_box(self) -> Box:
        return Box(self.types.min(axis=0), self.types.max(axis=0))


@dataclass(frozen=True)
class Menu:
    """Offers ``(quality[k], price[k])``; ``outside[k]`` flags a non-participation offer."""

    quality: np.ndarray
    price: np.ndarray
    outside: Optional[np.ndarray] = None

    def __post_init__(self):
        Q = np.array(self.quality, dtype=float)
        if Q.ndim == 1:
            Q = Q.reshape(-1, 1)
        p = np.array(self.price, dtype=float).reshape(-1)
        if Q.ndim != 2 or Q.shape[0] != p.shape[0]:
            raise ValueError("quality must be (K, d) with one price per offer")
        flags = np.zeros(p.shape[0], dtype=bool) if self.outside is None else np.array(self.outside, dtype=bool)
        if flags.shape != p.shape:
            raise ValueError("one outside flag per offer is required")
        for a in (Q, p, flags):
            a.setflags(write=False)
        object.__setattr__(self, "quality", Q)
        object.__setattr__(self, "price", p)
        object.__setattr__(self, "outside", flags)

    def __len__(self) -> int:
        return self.price.shape[0]

    @property
    def dim(self) -> int:
        return self.quality.shape[1]

    def margins(self) -> np.ndarray:
        """Retailer margin per offer; zero for outside options."""
        m = self.price - 0.5 * np.einsum("ij,ij->i", self.quality, self.quality)
        return np.where(self.outside, 0.0, m)

    def to_max_affine(self) -> MaxAffine:
        """The client value function ``x -> max_k <q_k, x> - p_k``."""
        return MaxAffine(self.quality, self.price)

    def subset(self, idx) -> "Menu":
        idx = np.asarray(idx, dtype=np.int64)
        return Menu(self.quality[idx], self.price[idx], self.outside[idx])

    def with_outside(self, r) -> "Menu":
        """Append the flagged non-participation offer ``(r, 0)``."""
        r = np.broadcast_to(np.asarray(r, dtype=float), (self.dim,))
        return Menu(
            np.vstack([self.quality, r]),
            np.append(self.price, 0.0),
            np.append(self.outside, True),
        )


@dataclass(frozen=True)
class SolveReport:
    objective: float
    violation: float
    kkt: float
    status: str


# ---------------------------------------------------------------------------
# client data


def generate_clients(d: int, n: int, seed: int = 0, low: float = 1.0, high: float = 2.0) -> ClientPopulation:
    """``n`` equally weighted clients drawn uniformly from ``[low, high]^d``."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    if not (math.isfinite(low) and math.isfinite(high) and low < high):
        raise ValueError("invalid client range")
    rng = np.random.default_rng(seed)
    return ClientPopulation(rng.uniform(low, high, size=(n, d)), np.full(n, 1.0 / n))


def clients_csv(pop: ClientPopulation) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j + 1}" for j in range(pop.dim)] + ["weight"])
    for x, rho in zip(pop.types, pop.weights):
        w.writerow([repr(float(v)) for v in x] + [repr(float(rho))])
    return buf.getvalue()


def save_clients(pop: ClientPopulation, path) -> None:
    Path(path).write_text(clients_csv(pop))


def load_clients(path) -> ClientPopulation:
    """Read a client CSV with header ``x1,...,xd,weight``."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header != [f"x{j + 1}" for j in range(d)] + ["weight"]:
        raise ValueError(f"{path}:1: header must be x1,...,xd,weight; got {','.join(header)}")
    X, w = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != d + 1:
            raise ValueError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"{path}:{lineno}: non-finite value")
        if vals[-1] <= 0:
            raise ValueError(f"{path}:{lineno}: weight must be positive, got {vals[-1]}")
        X.append(vals[:-1])
        w.append(vals[-1])
    if not X:
        raise ValueError(f"{path}: no client rows")
    return ClientPopulation(np.array(X), np.array(w))


# ---------------------------------------------------------------------------
# menu design


def _box(Q, d: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = (0.0, 3.0) if Q is None else Q
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,)).copy()
    if np.any(lo > hi) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("availability box Q must be a nonempty finite box")
    return lo, hi


def _reserve(r, d: int) -> np.ndarray:
    r = np.broadcast_to(np.asarray(0.1 if r is None else r, dtype=float), (d,)).copy()
    if not np.all(np.isfinite(r)):
        raise ValueError("reserve vector must be finite")
    return r


def constraint_violation(menu: Menu, pop: ClientPopulation, Q=None, r=None) -> float:
    """Largest violation of the participation, availability and IC constraints.

    ``menu`` holds one offer per client, in client order.
    """
    X, q, p = pop.types, menu.quality, menu.price
    lo, hi = _box(Q, pop.dim)
    r = _reserve(r, pop.dim)
    U = X @ q.T - p[None, :]  # U[k, l]: utility of client k for offer l
    own = np.diag(U)
    ic = np.max(U - own[:, None])
    ir = np.max(X @ r - own)
    box = max(np.max(lo - q), np.max(q - hi))
    return float(max(ic, ir, box, 0.0))


def kkt_residual(menu: Menu, pop: ClientPopulation, duals: dict, Q=None, r=None) -> float:
    """Stationarity plus complementarity residual of the menu-design QP.

    ``duals`` holds nonnegative multipliers ``ir`` (N,), ``ic`` (N, N) with
    ``ic[k, l]`` for client ``k`` against offer ``l``, ``lower`` and ``upper`` (N, d).
    """
    X, q, p, rho = pop.types, menu.quality, menu.price, pop.weights
    lo, hi = _box(Q, pop.dim)
    r = _reserve(r, pop.dim)
    lam = np.asarray(duals["ir"], dtype=float)
    mu = np.array(duals["ic"], dtype=float)
    np.fill_diagonal(mu, 0.0)
    a = np.asarray(duals["lower"], dtype=float)
    b = np.asarray(duals["upper"], dtype=float)
    out_mu, in_mu = mu.sum(axis=1), mu.sum(axis=0)
    grad_q = -rho[:, None] * q + (lam + out_mu)[:, None] * X - mu.T @ X + a - b
    grad_p = rho - lam - out_mu + in_mu
    U = X @ q.T - p[None, :]
    own = np.diag(U)
    slack_ir = own - X @ r
    slack_ic = own[:, None] - U
    comp = max(
        np.max(np.abs(lam * slack_ir)),
        np.max(np.abs(mu * slack_ic)),
        np.max(np.abs(a * (q - lo))),
        np.max(np.abs(b * (hi - q))),
    )
    neg = max(0.0, -min(lam.min(), mu.min(), a.min(), b.min()))
    return float(max(np.abs(grad_q).max(), np.abs(grad_p).max(), comp, neg))


def solve_rochet_chone(
    pop: ClientPopulation,
    Q=None,
    r=None,
    solver: str = "CLARABEL",
    report: bool = False,
):
    """Solve the menu-design QP; returns one offer per client (and a report if asked).

    ``Q`` is a ``(lo, hi)`` pair (scalars or vectors, default ``[0, 3]^d``) and
    ``r`` the reserve vector (default ``0.1`` in every coordinate). The result
    is re-checked independently: constraint violation must stay within
    ``1e-6`` and the KKT residual within ``1e-4``.
    """
    import cvxpy as cp

    X, rho = pop.types, pop.weights
    N, d = X.shape
    lo, hi = _box(Q, d)
    r = _reserve(r, d)
    q = cp.Variable((N, d))
    p = cp.Variable(N)
    own = cp.sum(cp.multiply(X, q), axis=1) - p
    cross = X @ q.T - cp.reshape(p, (1, N), order="C")
    cons = [
        own >= X @ r,
        cp.reshape(own, (N, 1), order="C") - cross >= 0,
        q >= lo[None, :],
        q <= hi[None, :],
    ]
    objective = cp.Maximize(rho @ p - 0.5 * cp.sum(cp.multiply(rho[:, None], cp.square(q))))
    prob = cp.Problem(objective, cons)
    try:
        prob.solve(solver=solver)
    except cp.error.SolverError as exc:
        raise PricingError(f"QP solver failed: {exc}") from None
    if prob.status in ("infeasible", "infeasible_inaccurate"):
        raise PricingError("menu-design QP is infeasible for this Q and r")
    if q.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
        raise PricingError(f"QP solver did not converge (status {prob.status})")
    menu = Menu(q.value, p.value)
    viol = constraint_violation(menu, pop, (lo, hi), r)
    duals = dict(ir=cons[0].dual_value, ic=cons[1].dual_value, lower=cons[2].dual_value, upper=cons[3].dual_value)
    kkt = kkt_residual(menu, pop, duals, (lo, hi), r)
    if viol > FEAS_TOL or kkt > KKT_TOL:
        raise PricingError(f"QP solution rejected: violation {viol:.3e}, KKT residual {kkt:.3e} ({prob.status})")
    objective_value = float(rho @ menu.margins())
    if report:
        return menu, SolveReport(objective_value, viol, kkt, prob.status)
    return menu


# ---------------------------------------------------------------------------
# pruning and evaluation


def prune_menu(menu: Menu, n: int, method: str, pop: ClientPopulation, r=None) -> Menu:
    """Keep ``n`` offers chosen by ``method`` and append the outside option ``(r, 0)``.

    Selection works on the points ``(q_k, p_k)``: ``kcenter`` clusters them
    directly, ``kcenter-lp`` first drops offers no client type in the bounding
    box of ``pop`` can strictly prefer, and ``pga``/``pgd`` score subsets on
    the weighted client cloud.
    """
    if method not in PRICING_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {PRICING_METHODS}")
    if n < 1:
        raise ValueError("budget must be at least 1")
    base = menu.subset(np.flatnonzero(~menu.outside))
    r = _reserve(r, base.dim)
    if len(base) == 0:
        raise ValueError("menu has no regular offers")
    if n >= len(base):
        return base.with_outside(r)
    u = base.to_max_affine()
    if method == "pga":
        keep = np.sort(pga_prune(u, n, pop.cloud()))
    elif method == "pgd":
        keep = pgd_prune(u, n, pop.cloud())
    else:
        A = np.arange(len(base)) if method == "kcenter" else prune_redundant(u, pop.bounding_box())
        if A.size <= n:
            keep = A
        else:
            res = greedy_kcenter(u.restrict(A).lifted_points(), n)
            keep = np.sort(A[np.array(res.selected)])
    return base.subset(keep).with_outside(r)


def evaluate_revenue(menu: Menu, pop: ClientPopulation, reference: Optional[float] = None, tie_tol: float = 1e-9):
    """Revenue when each client picks its utility-maximizing offer.

    Utilities within ``tie_tol`` (relative to ``max(1, |best|)``) of the best
    are ties, broken toward the larger retailer margin and then the lowest
    index. Outside options earn nothing. Returns ``(revenue, ratio, assignment)``
    where ``ratio`` is ``revenue / reference`` (``None`` without a reference).
    """
    if len(menu) == 0:
        raise ValueError("menu must be nonempty")
    U = pop.types @ menu.quality.T - menu.price[None, :]
    best = U.max(axis=1, keepdims=True)
    ties = U >= best - tie_tol * np.maximum(1.0, np.abs(best))
    margins = menu.margins()
    score = np.where(ties, margins[None, :], -np.inf)
    assignment = np.argmax(score, axis=1)  # first maximal index wins
    revenue = float(pop.weights @ margins[assignment])
    ratio = None
    if reference is not None:
        ratio = revenue / reference if reference != 0 else (1.0 if revenue == 0 else math.inf)
    return revenue, ratio, assignment


# ---------------------------------------------------------------------------
# batch experiment


@dataclass
class PricingConfig:
    dims: list = field(default_factory=lambda: [2, 3, 6])
    n_clients: int = 1000
    batch_size: int = 100
    budgets: list = field(default_factory=lambda: [10, 25, 50])
    methods: list = field(default_factory=lambda: list(PRICING_METHODS))
    reserve: float = 0.1
    q_low: float = 0.0
    q_high: float = 3.0
    client_low: float = 1.0
    client_high: float = 2.0
    seed: int = 0

    def validate(self) -> None:
        errs = []
        if not self.dims or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in self.dims):
            errs.append("dims: must be a nonempty list of positive integers")
        for name in ("n_clients", "batch_size"):
            val = getattr(self, name)
            if not isinstance(val, int) or isinstance(val, bool) or val < 1:
                errs.append(f"{name}: must be a positive integer")
        if not errs and self.n_clients % self.batch_size:
            errs.append("n_clients: must be a multiple of batch_size")
        if not self.budgets or not all(isinstance(b, int) and not isinstance(b, bool) and b >= 1 for b in self.budgets):
            errs.append("budgets: must be a nonempty list of positive integers")
        bad = [m for m in self.methods if m not in PRICING_METHODS]
        if not self.methods or bad:
            errs.append(f"methods: unknown {bad}; expected a nonempty subset of {list(PRICING_METHODS)}")
        for name in ("reserve", "q_low", "q_high", "client_low", "client_high"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
                errs.append(f"{name}: must be a finite number")
        if not errs:
            if self.q_low > self.q_high:
                errs.append("q_high: must be >= q_low")
            if self.client_low >= self.client_high:
                errs.append("client_high: must be > client_low")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            errs.append("seed: must be a nonnegative integer")
        if errs:
            raise ValueError("; ".join(errs))


def _run_batch(args):
    cfg, d, b, pop = args
    r = np.full(d, cfg.reserve)
    Q = (cfg.q_low, cfg.q_high)
    full = solve_rochet_chone(pop, Q, r)
    reference, _, _ = evaluate_revenue(full.with_outside(r), pop)
    rows = []
    for method in cfg.methods:
        for n in cfg.budgets:
            t0 = time.perf_counter()
            pruned = prune_menu(full, n, method, pop, r)
            seconds = time.perf_counter() - t0
            _, ratio, assignment = evaluate_revenue(pruned, pop, reference)
            best = (pop.types @ pruned.quality.T - pruned.price).max(axis=1)
            ir_gap = float(np.max(pop.types @ r - best))
            rows.append(dict(dim=d, batch=b, method=method, budget=n, ratio=ratio, seconds=seconds, ir_gap=ir_gap))
    return rows


def batch_experiment(cfg: PricingConfig, workers: int = 1) -> list[dict]:
    """Solve and prune every batch for every dimension.

    Clients for dimension ``d`` come from ``generate_clients(d, n_clients,
    seed + d)`` and are split into consecutive batches, each reweighted to sum
    to one. Rows are ordered by (dim, batch, method, budget) whatever the
    worker count.
    """
    cfg.validate()
    jobs = []
    for d in cfg.dims:
        pop = generate_clients(d, cfg.n_clients, cfg.seed + d, cfg.client_low, cfg.client_high)
        for b in range(cfg.n_clients // cfg.batch_size):
            idx = np.arange(b * cfg.batch_size, (b + 1) * cfg.batch_size)
            jobs.append((cfg, d, b, pop.subset(idx)))
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run_batch, jobs))
    else:
        chunks = [_run_batch(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def results_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RESULT_FIELDS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
