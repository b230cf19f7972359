"""Max-plus value-function propagation for two-qubit gate synthesis.

The value function is kept as a min-plus ensemble over SU(4)::

    C(U) = min_l c_l + Re tr(P_l^dagger U)

One backward step multiplies the ensemble by the 11 controls (zero, and the
five Hamiltonians with either sign); pruning then caps its size.

Complex 4x4 matrices are flattened row-major with interleaved real and
imaginary parts, so the Euclidean inner product on R^32 equals Re tr(A^dagger B).
"""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import pgd_prune
from .kcenter import greedy_kcenter
from .polyfunc import Box, MaxAffine, SpectralBall
from .redundancy import SpectralOptions, prune_redundant

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "AffineEnsemble",
    "ControlSet",
    "QuantumConfig",
    "METHODS",
    "build_hamiltonians",
    "expm",
    "propagator",
    "control_set",
    "init_ensemble",
    "propagate_step",
    "prune_ensemble",
    "eval_value",
    "evaluation_unitary",
    "grid_eval",
    "strip_means",
    "brute_force_value",
    "run_value_iteration",
    "benchmark_run",
    "flatten",
    "unflatten",
]

log = logging.getLogger(__name__)

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

METHODS = ("kcenter", "kcenter-lp", "kcenter-sdp", "pgd-sdp")
DIM = 4


def flatten(A: np.ndarray) -> np.ndarray:
    """``(..., 4, 4)`` complex -> ``(..., 32)`` real, row-major, (Re, Im) interleaved."""
    A = np.asarray(A, dtype=complex)
    flat = A.reshape(A.shape[:-2] + (-1,))
    out = np.empty(flat.shape[:-1] + (2 * flat.shape[-1],))
    out[..., 0::2] = flat.real
    out[..., 1::2] = flat.imag
    return out


def unflatten(x: np.ndarray, n: int = DIM) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return (x[..., 0::2] + 1j * x[..., 1::2]).reshape(x.shape[:-1] + (n, n))


def build_hamiltonians() -> list[np.ndarray]:
    """Four single-body terms and the sigma_x (x) sigma_x coupling."""
    return [
        np.kron(I2, SIGMA_X),
        np.kron(I2, SIGMA_Z),
        np.kron(SIGMA_X, I2),
        np.kron(SIGMA_Z, I2),
        np.kron(SIGMA_X, SIGMA_X),
    ]


# degree-6 diagonal Pade coefficients for exp
_PADE6 = [math.factorial(12 - k) * math.factorial(6) / (math.factorial(12) * math.factorial(k) * math.factorial(6 - k)) for k in range(7)]


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a [6/6] Pade approximant.

    The scaled matrix has 1-norm <= 1/2, where the truncation error is far
    below 1e-12 relative.
    """
    A = np.asarray(A, dtype=complex)
    norm = np.abs(A).sum(axis=0).max()
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    X = A / (2.0**s)
    n = A.shape[0]
    ident = np.eye(n, dtype=complex)
    term = ident
    N = _PADE6[0] * ident
    D = _PADE6[0] * ident
    for k in range(1, 7):
        term = term @ X
        N = N + _PADE6[k] * term
        D = D + ((-1) ** k) * _PADE6[k] * term
    E = np.linalg.solve(D, N)
    for _ in range(s):
        E = E @ E
    return E


@dataclass(frozen=True, eq=False)
class ControlSet:
    """Zero control plus +/- each basis vector of R^M, with diagonal cost matrix R."""

    vectors: np.ndarray  # (2M+1, M)
    R: np.ndarray  # (M,) diagonal

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def costs(self) -> np.ndarray:
        """``sqrt(v^T R v)`` for every control."""
        return np.sqrt(np.einsum("ij,j,ij->i", self.vectors, self.R, self.vectors))


def control_set(r: float, M: int = 5) -> ControlSet:
    if r <= 0:
        raise ValueError("cost ratio r must be positive")
    vecs = [np.zeros(M)]
    for k in range(M):
        for sgn in (1.0, -1.0):
            v = np.zeros(M)
            v[k] = sgn
            vecs.append(v)
    R = np.ones(M)
    R[: M - 1] = 1.0 / r
    return ControlSet(np.array(vecs), R)


def propagator(v, tau: float, hamiltonians=None) -> np.ndarray:
    """``exp(-i sum_k v_k H_k tau)``."""
    H = build_hamiltonians() if hamiltonians is None else hamiltonians
    G = sum(vk * Hk for vk, Hk in zip(np.asarray(v, dtype=float), H))
    return expm(-1j * tau * np.asarray(G, dtype=complex))


@dataclass(frozen=True, eq=False)
class AffineEnsemble:
    c: np.ndarray  # (L,)
    P: np.ndarray  # (L, 4, 4) complex
    epsilon: float
    tau: float
    r_ratio: float
    step_index: int = 0

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        P = np.asarray(self.P, dtype=complex)
        if c.size == 0 or P.shape != (c.size, DIM, DIM):
            raise ValueError("ensemble needs matching nonempty c and P")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(P))):
            raise ValueError("ensemble entries must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "P", P)

    def __len__(self) -> int:
        return self.c.size

    def subset(self, idx) -> "AffineEnsemble":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, c=self.c[idx], P=self.P[idx])

    def to_max_affine(self) -> MaxAffine:
        """``-C`` as a max-affine function of flatten(U): slopes flatten(-P), intercepts c."""
        return MaxAffine(flatten(-self.P), self.c)


def init_ensemble(epsilon: float, tau: float = 0.1, r_ratio: float = 3.0, n_qubits: int = 2) -> AffineEnsemble:
    """Terminal penalty ``phi(U)/eps = |U - I|_F^2 / eps`` written as ``c0 + <P0, U>``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    n = 2**n_qubits
    c0 = 2.0 * n / epsilon
    P0 = -(2.0 / epsilon) * np.eye(n, dtype=complex)
    return AffineEnsemble(np.array([c0]), P0[None], epsilon, tau, r_ratio, 0)


def _step_data(ctrl: ControlSet, tau: float):
    H = build_hamiltonians()
    Phis = np.array([propagator(v, tau, H) for v in ctrl.vectors])
    return Phis, ctrl.costs() * tau


def propagate_step(e: AffineEnsemble, ctrl: ControlSet | None = None) -> AffineEnsemble:
    """One backward step: entry ``(l, l')`` has ``c = c_l' + cost(v_l) tau`` and
    ``P = Phi(v_l)^dagger P_l'`` (control-major order)."""
    ctrl = control_set(e.r_ratio) if ctrl is None else ctrl
    Phis, cost = _step_data(ctrl, e.tau)
    Pnew = np.einsum("uji,ljk->ulik", Phis.conj(), e.P)
    cnew = cost[:, None] + e.c[None, :]
    return replace(e, c=cnew.reshape(-1), P=Pnew.reshape(-1, DIM, DIM), step_index=e.step_index + 1)


def eval_value(e: AffineEnsemble, U) -> np.ndarray | float:
    """``min_l c_l + Re tr(P_l^dagger U)`` at one unitary or a batch ``(..., 4, 4)``."""
    U = np.asarray(U, dtype=complex)
    vals = flatten(U) @ flatten(e.P).T + e.c
    out = vals.min(axis=-1)
    return float(out) if out.ndim == 0 else out


def evaluation_unitary(x, y) -> np.ndarray:
    """``exp(i (x XX + y YY))``; XX and YY commute and square to the identity."""
    XX = np.kron(SIGMA_X, SIGMA_X)
    YY = np.kron(SIGMA_Y, SIGMA_Y)
    x = np.asarray(x, dtype=float)[..., None, None]
    y = np.asarray(y, dtype=float)[..., None, None]
    I4 = np.eye(DIM)
    return (np.cos(x) * I4 + 1j * np.sin(x) * XX) @ (np.cos(y) * I4 + 1j * np.sin(y) * YY)


def grid_axes(resolution: int = 41) -> np.ndarray:
    return np.linspace(-np.pi, np.pi, resolution)


def grid_eval(e: AffineEnsemble, resolution: int = 41) -> tuple[np.ndarray, np.ndarray]:
    """Values on the uniform ``resolution x resolution`` grid; ``V[i, j]`` is at ``(x_i, y_j)``."""
    ax = grid_axes(resolution)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    U = evaluation_unitary(X.reshape(-1), Y.reshape(-1))
    return ax, eval_value(e, U).reshape(resolution, resolution)


def strip_means(axes: np.ndarray, V: np.ndarray, half_width: float = 0.15 * np.pi) -> tuple[float, float]:
    """Mean over ``|y| <= w`` (along XX) and over ``|x| <= w`` (along YY)."""
    near = np.abs(axes) <= half_width * (1 + 1e-12)
    return float(V[:, near].mean()), float(V[near, :].mean())


def brute_force_value(U: np.ndarray, steps: int, epsilon: float, tau: float, r_ratio: float) -> float:
    """Minimum over all control sequences of running cost plus terminal penalty (test oracle)."""
    ctrl = control_set(r_ratio)
    Phis, cost = _step_data(ctrl, tau)
    best = np.inf
    states = [(0.0, np.asarray(U, dtype=complex))]
    for _ in range(steps):
        states = [(c + cost[i], Phis[i] @ W) for c, W in states for i in range(ctrl.size)]
    ident = np.eye(DIM)
    for c, W in states:
        D = W - ident
        best = min(best, c + float(np.real(np.vdot(D, D))) / epsilon)
    return best


# ---------------------------------------------------------------------------
# pruning


@dataclass(frozen=True)
class PruneOptions:
    intercept_weight: float = 1.0
    spectral: SpectralOptions = SpectralOptions()
    pgd_lazy: bool = True
    pgd_batch: int = 4
    validate: int = 200


def prune_ensemble(e: AffineEnsemble, n: int, method: str = "kcenter-lp", options: PruneOptions = PruneOptions()) -> AffineEnsemble:
    """Keep at most ``n`` entries, choosing them on the points ``(flatten(-P_l), c_l)``."""
    if n < 1:
        raise ValueError("budget must be positive")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if n >= len(e):
        return e
    u = e.to_max_affine()
    if method == "pgd-sdp":
        keep = pgd_prune(u, n, SpectralBall(DIM, DIM, 1.0), lazy=options.pgd_lazy, batch=options.pgd_batch, spectral=options.spectral)
        return e.subset(keep)
    if method == "kcenter":
        A = np.arange(len(e))
    elif method == "kcenter-lp":
        A = prune_redundant(u, Box.cube(2 * DIM * DIM, -1.0, 1.0), validate=options.validate)
    else:
        A = prune_redundant(u, SpectralBall(DIM, DIM, 1.0), spectral=options.spectral, validate=options.validate)
    if A.size <= n:
        return e.subset(A)
    pts = u.restrict(A).lifted_points(options.intercept_weight)
    res = greedy_kcenter(pts, n)
    return e.subset(A[np.sort(np.array(res.selected))])


# ---------------------------------------------------------------------------
# experiments


@dataclass
class QuantumConfig:
    epsilon: float = 0.05
    tau: float = 0.2
    steps: int = 10
    r: float = 1.3
    budgets: list = field(default_factory=lambda: [20, 50])
    methods: list = field(default_factory=lambda: ["kcenter", "kcenter-lp", "kcenter-sdp", "pgd-sdp"])
    grid_resolution: int = 41
    intercept_weight: float = 1.0
    sdp_iterations: int = 500
    sdp_restarts: int = 5
    pgd_lazy: bool = True
    seed: int = 0

    def validate(self) -> None:
        errs = []
        for name in ("epsilon", "tau", "r", "intercept_weight"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and val > 0 and math.isfinite(val)):
                errs.append(f"{name}: must be a positive number")
        for name in ("steps", "grid_resolution", "sdp_iterations", "sdp_restarts"):
            val = getattr(self, name)
            if not isinstance(val, int) or isinstance(val, bool) or val < 1:
                errs.append(f"{name}: must be a positive integer")
        if not self.budgets or not all(isinstance(b, int) and b >= 1 for b in self.budgets):
            errs.append("budgets: must be a nonempty list of positive integers")
        bad = [m for m in self.methods if m not in METHODS]
        if not self.methods or bad:
            errs.append(f"methods: unknown {bad}; expected a nonempty subset of {list(METHODS)}")
        if errs:
            raise ValueError("; ".join(errs))

    def prune_options(self) -> PruneOptions:
        return PruneOptions(
            intercept_weight=self.intercept_weight,
            spectral=SpectralOptions(iterations=self.sdp_iterations, restarts=self.sdp_restarts, seed=self.seed),
            pgd_lazy=self.pgd_lazy,
        )


PLANE_CONFIG = dict(epsilon=0.05, tau=0.1, steps=6, r=3.0, budgets=[100], methods=["kcenter-lp"])
SCALED_CONFIG = dict(epsilon=0.05, tau=0.2, steps=10, r=1.3, budgets=[20, 50], methods=["kcenter-lp", "pgd-sdp"])
FULL_CONFIG = dict(epsilon=0.05, tau=0.2, steps=50, r=1.3, budgets=[20, 40, 60, 80, 100])


@dataclass
class RunResult:
    method: str
    budget: int
    ensemble: AffineEnsemble
    sizes: list
    seconds: float


def run_value_iteration(cfg: QuantumConfig, method: str | None, budget: int | None) -> RunResult:
    """Propagate ``cfg.steps`` backward steps, pruning after each product when a budget is set."""
    ctrl = control_set(cfg.r)
    e = init_ensemble(cfg.epsilon, cfg.tau, cfg.r)
    opts = cfg.prune_options()
    sizes = [len(e)]
    t0 = time.perf_counter()
    for _ in range(cfg.steps):
        e = propagate_step(e, ctrl)
        if budget is not None and len(e) > budget:
            e = prune_ensemble(e, budget, method, opts)
        sizes.append(len(e))
    return RunResult(method or "none", budget or 0, e, sizes, time.perf_counter() - t0)


def _one(args):
    cfg, method, budget = args
    res = run_value_iteration(cfg, method, budget)
    ax, V = grid_eval(res.ensemble, cfg.grid_resolution)
    return res, ax, V


def benchmark_run(cfg: QuantumConfig, workers: int = 1):
    """Run every (method, budget) pair. Returns ``(rows, grids)``.

    ``rows`` follow the CSV schema ``method,budget,step_count,mean_value,seconds,final_size``
    (plus the per-step sizes); ``grids`` maps ``(method, budget)`` to ``(axes, V)``.
    """
    cfg.validate()
    jobs = [(cfg, m, b) for m in cfg.methods for b in cfg.budgets]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_one, jobs))
    else:
        results = [_one(j) for j in jobs]
    rows, grids = [], {}
    for (_, m, b), (res, ax, V) in zip(jobs, results):
        rows.append(
            dict(
                method=m,
                budget=b,
                step_count=cfg.steps,
                mean_value=float(np.abs(V).mean()),
                seconds=res.seconds,
                final_size=len(res.ensemble),
                sizes=" ".join(str(s) for s in res.sizes),
            )
        )
        grids[(m, b)] = (ax, V)
    return rows, grids


QUANTUM_FIELDS = ["method", "budget", "step_count", "mean_value", "seconds", "final_size", "sizes"]


def metrics_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=QUANTUM_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def grid_csv(axes: np.ndarray, V: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "value"])
    for i, x in enumerate(axes):
        for j, y in enumerate(axes):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(V[i, j]))])
    return buf.getvalue()
