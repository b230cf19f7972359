"""One-dimensional check of the approximation/quantization duality.

Pipeline for a max-affine ``u`` on ``[a, b]`` with density ``rho``::

    u --(Monge-Ampere measure)--> mu --(optimal quantization)--> mu_n
      --(semi-discrete Monge-Ampere solve)--> u_n --(mean-zero shift)--> u_n

All integrals are exact: densities are piecewise constant and every
integrand is piecewise polynomial of degree <= 2.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .polyfunc import MaxAffine

__all__ = [
    "DiscreteMeasure1D",
    "Density1D",
    "ma_measure_1d",
    "active_cells",
    "wasserstein_1d",
    "quantize_1d",
    "brute_force_quantize_1d",
    "solve_ma_1d",
    "mean_zero_normalize",
    "l2_exact_1d",
    "duality_pipeline_1d",
    "PipelineDiagnostics",
    "diagnostics_csv",
]

MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure1D:
    """Finitely supported probability measure; atoms sorted, duplicates merged."""

    locations: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.locations, dtype=float))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if x.shape != m.shape or x.ndim != 1 or x.size == 0:
            raise ValueError("need matching nonempty 1-D locations and masses")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m))):
            raise ValueError("locations and masses must be finite")
        if np.any(m <= 0):
            raise ValueError("masses must be positive")
        if abs(m.sum() - 1.0) > MASS_TOL * max(1, x.size):
            raise ValueError(f"masses sum to {m.sum()!r}, expected 1")
        order = np.argsort(x, kind="stable")
        x, m = x[order], m[order]
        uniq, inv = np.unique(x, return_inverse=True)
        if uniq.size != x.size:
            m = np.bincount(inv, weights=m)
            x = uniq
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "masses", m)

    @classmethod
    def dirac(cls, x: float) -> "DiscreteMeasure1D":
        return cls([x], [1.0])

    def __len__(self) -> int:
        return self.locations.size

    def cdf_knots(self) -> np.ndarray:
        c = np.concatenate([[0.0], np.cumsum(self.masses)])
        c[-1] = 1.0
        return c


@dataclass(frozen=True, eq=False)
class Density1D:
    """Piecewise-constant probability density on ``[breaks[0], breaks[-1]]``.

    ``values[i]`` is the density on ``[breaks[i], breaks[i+1]]``; values are
    rescaled so the total mass is exactly one.
    """

    breaks: np.ndarray
    values: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.size < 2 or v.shape != (t.size - 1,):
            raise ValueError("need k+1 breakpoints and k density values")
        if np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(v <= 0) or not np.all(np.isfinite(v)):
            raise ValueError("density values must be positive and finite")
        v = v / float(np.dot(v, np.diff(t)))
        cum = np.concatenate([[0.0], np.cumsum(v * np.diff(t))])
        cum[-1] = 1.0
        object.__setattr__(self, "breaks", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def uniform(cls, a: float = 0.0, b: float = 1.0) -> "Density1D":
        return cls([a, b], [1.0])

    @property
    def a(self) -> float:
        return float(self.breaks[0])

    @property
    def b(self) -> float:
        return float(self.breaks[-1])

    def cdf(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.a, self.b)
        i = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, self.values.size - 1)
        return self._cum[i] + self.values[i] * (x - self.breaks[i])

    def quantile(self, s) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
        i = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, self.values.size - 1)
        return np.minimum(self.breaks[i] + (s - self._cum[i]) / self.values[i], self.b)

    def integrate_poly(self, coeffs_fn, knots) -> float:
        """Integrate a piecewise polynomial (degree <= 2 on each knot interval) times rho.

        ``coeffs_fn(x)`` evaluates the polynomial; Simpson's rule is exact on
        every sub-interval of the refinement of ``knots`` by the density breaks.
        """
        pts = np.union1d(np.clip(knots, self.a, self.b), self.breaks)
        lo, hi = pts[:-1], pts[1:]
        mid = 0.5 * (lo + hi)
        dens = self.values[np.clip(np.searchsorted(self.breaks, mid, side="right") - 1, 0, self.values.size - 1)]
        f = (coeffs_fn(lo) + 4.0 * coeffs_fn(mid) + coeffs_fn(hi)) / 6.0
        return float(np.sum(dens * f * (hi - lo)))


# ---------------------------------------------------------------------------
# Monge-Ampere measure of the conjugate


def active_cells(u: MaxAffine, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Upper envelope of ``u`` on ``[a, b]``.

    Returns ``(terms, knots)``: term ``terms[i]`` attains the maximum on
    ``[knots[i], knots[i+1]]``. Cells of zero length are omitted, so a term
    that only touches the envelope at a point gets no cell.
    """
    if u.dim != 1:
        raise ValueError("active_cells needs a one-dimensional function")
    q = u.slopes[:, 0]
    p = u.intercepts
    x = float(a)
    vals = q * x - p
    top = vals.max()
    tied = np.flatnonzero(vals >= top - 1e-14 * max(1.0, abs(top)))
    k = int(tied[np.argmax(q[tied])])
    terms, knots = [k], [x]
    while True:
        steeper = np.flatnonzero(q > q[k])
        if steeper.size == 0:
            break
        cross = (p[steeper] - p[k]) / (q[steeper] - q[k])
        cross = np.maximum(cross, x)
        nxt = cross.min()
        if nxt >= b:
            break
        at = steeper[cross <= nxt]
        k = int(at[np.argmax(q[at])])
        x = float(nxt)
        if x == knots[-1]:
            terms[-1] = k
        else:
            terms.append(k)
            knots.append(x)
    knots.append(float(b))
    return np.array(terms, dtype=np.int64), np.array(knots)


def ma_measure_1d(u: MaxAffine, rho: Density1D) -> DiscreteMeasure1D:
    """Push-forward of ``rho`` by ``u'``: an atom at each active slope, weighted by its cell."""
    terms, knots = active_cells(u, rho.a, rho.b)
    cdf = rho.cdf(knots)
    cdf[0], cdf[-1] = 0.0, 1.0
    mass = np.diff(cdf)
    keep = mass > 0
    return DiscreteMeasure1D(u.slopes[terms[keep], 0], mass[keep] / mass[keep].sum())


# ---------------------------------------------------------------------------
# Wasserstein distance and quantization


def wasserstein_1d(mu: DiscreteMeasure1D, nu: DiscreteMeasure1D, p: int = 2) -> float:
    """``W_p`` via the quantile coupling, integrated exactly on merged CDF knots."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    cm, cn = mu.cdf_knots(), nu.cdf_knots()
    s = np.union1d(cm, cn)
    mid = 0.5 * (s[:-1] + s[1:])
    qm = mu.locations[np.clip(np.searchsorted(cm, mid, side="right") - 1, 0, len(mu) - 1)]
    qn = nu.locations[np.clip(np.searchsorted(cn, mid, side="right") - 1, 0, len(nu) - 1)]
    cost = float(np.sum(np.abs(qm - qn) ** p * np.diff(s)))
    return cost ** (1.0 / p)


def _cluster_costs(x: np.ndarray, m: np.ndarray, p: int):
    """``cost[i, j]`` and representative for atoms ``i..j`` (inclusive) merged to one point."""
    N = x.size
    cost = np.zeros((N, N))
    rep = np.zeros((N, N))
    for i in range(N):
        for j in range(i, N):
            xs, ms = x[i : j + 1], m[i : j + 1]
            if p == 2:
                c = float(ms @ xs / ms.sum())
                cost[i, j] = float(ms @ (xs - c) ** 2)
            else:
                cum = np.cumsum(ms)
                c = float(xs[np.searchsorted(cum, 0.5 * cum[-1] * (1 - 1e-15))])
                cost[i, j] = float(ms @ np.abs(xs - c))
            rep[i, j] = c
    return cost, rep


def _measure_from_partition(x, m, cuts, rep):
    bounds = [0, *cuts, x.size]
    locs = [rep[bounds[t], bounds[t + 1] - 1] for t in range(len(bounds) - 1)]
    mass = [m[bounds[t] : bounds[t + 1]].sum() for t in range(len(bounds) - 1)]
    mass = np.array(mass)
    return DiscreteMeasure1D(locs, mass / mass.sum())


def quantize_1d(mu: DiscreteMeasure1D, n: int, p: int = 2) -> tuple[DiscreteMeasure1D, float]:
    """Optimal ``n``-point quantizer of ``mu`` in ``W_p`` and its error.

    Dynamic programming over contiguous partitions of the sorted atoms; each
    cluster is represented by its weighted median (p=1) or mean (p=2).
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if n < 1:
        raise ValueError("budget must be positive")
    x, m = mu.locations, mu.masses
    N = x.size
    if n >= N:
        return mu, 0.0
    cost, rep = _cluster_costs(x, m, p)
    # best[t, j]: optimal cost of atoms 0..j-1 using t clusters
    best = np.full((n + 1, N + 1), np.inf)
    arg = np.zeros((n + 1, N + 1), dtype=np.int64)
    best[0, 0] = 0.0
    for t in range(1, n + 1):
        for j in range(t, N + 1):
            cand = best[t - 1, t - 1 : j] + cost[t - 1 : j, j - 1]
            i = int(np.argmin(cand))
            best[t, j] = cand[i]
            arg[t, j] = i + t - 1
    cuts, j = [], N
    for t in range(n, 0, -1):
        i = arg[t, j]
        cuts.append(i)
        j = i
    cuts = sorted(cuts)[1:]
    nu = _measure_from_partition(x, m, cuts, rep)
    return nu, float(max(best[n, N], 0.0)) ** (1.0 / p)


def brute_force_quantize_1d(mu: DiscreteMeasure1D, n: int, p: int = 2) -> float:
    """Quantization error by enumerating every contiguous ``n``-partition (test oracle)."""
    x, m = mu.locations, mu.masses
    N = x.size
    if n >= N:
        return 0.0
    best = np.inf
    for cuts in itertools.combinations(range(1, N), n - 1):
        bounds = [0, *cuts, N]
        total = 0.0
        for s, e in zip(bounds[:-1], bounds[1:]):
            xs, ms = x[s:e], m[s:e]
            if p == 2:
                total += float(ms @ (xs - ms @ xs / ms.sum()) ** 2)
            else:
                total += min(float(ms @ np.abs(xs - c)) for c in xs)
        best = min(best, total)
    return best ** (1.0 / p)


# ---------------------------------------------------------------------------
# semi-discrete Monge-Ampere in 1D


def solve_ma_1d(q, nu, rho: Density1D, p_first: float = 0.0) -> MaxAffine:
    """Max-affine ``u_n`` with slopes ``q`` whose cells carry ``rho``-mass ``nu``.

    Breakpoints are ``t_k = F^{-1}(nu_1 + ... + nu_k)`` and intercepts chain
    by continuity, ``p_{k+1} = p_k + (q_{k+1} - q_k) t_k``. The solution is
    unique up to a common shift of the intercepts (``p_first`` fixes it).
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if q.shape != nu.shape or q.ndim != 1 or q.size == 0:
        raise ValueError("q and nu must be matching nonempty vectors")
    if np.any(np.diff(q) <= 0):
        raise ValueError("slopes must be strictly increasing")
    if np.any(nu <= 0):
        raise ValueError("masses must be positive")
    if abs(nu.sum() - 1.0) > 1e-9:
        raise ValueError("masses must sum to one")
    t = rho.quantile(np.cumsum(nu)[:-1])
    p = np.empty(q.size)
    p[0] = p_first
    if q.size > 1:
        p[1:] = p_first + np.cumsum(np.diff(q) * t)
    return MaxAffine(q.reshape(-1, 1), p)


def _knots(*fns: MaxAffine, rho: Density1D) -> np.ndarray:
    ks = [active_cells(f, rho.a, rho.b)[1] for f in fns]
    return np.unique(np.concatenate(ks))


def _evaluator(u: MaxAffine):
    Q, p = u.slopes[:, 0], u.intercepts
    return lambda x: (np.multiply.outer(np.asarray(x), Q) - p).max(axis=-1)


def mean_zero_normalize(u: MaxAffine, u_n: MaxAffine, rho: Density1D) -> MaxAffine:
    """Shift ``u_n`` so that ``integral (u - u_n) rho = 0``."""
    fu, fn = _evaluator(u), _evaluator(u_n)
    shift = rho.integrate_poly(lambda x: fu(x) - fn(x), _knots(u, u_n, rho=rho))
    return MaxAffine(u_n.slopes, u_n.intercepts - shift)


def l2_exact_1d(u: MaxAffine, v: MaxAffine, rho: Density1D) -> float:
    """``L2(rho)`` distance, exact on the common refinement of the cells."""
    fu, fv = _evaluator(u), _evaluator(v)
    val = rho.integrate_poly(lambda x: (fu(x) - fv(x)) ** 2, _knots(u, v, rho=rho))
    return float(np.sqrt(max(val, 0.0)))


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class PipelineDiagnostics:
    n: int
    w1: float  # W_1(mu, quantized)
    w2: float  # W_2(mu, quantized)
    l2_error: float  # ||u - u_n||_{L2(rho)}
    mean_gap: float  # integral (u - u_n) rho after normalization


def duality_pipeline_1d(u: MaxAffine, n: int, rho: Density1D, p: int = 2):
    """Approximate ``u`` with at most ``n`` pieces through measure quantization.

    Returns ``(u_n, diagnostics)``.
    """
    mu = ma_measure_1d(u, rho)
    nu, _ = quantize_1d(mu, n, p)
    u_n = solve_ma_1d(nu.locations, nu.masses, rho)
    u_n = mean_zero_normalize(u, u_n, rho)
    fu, fn = _evaluator(u), _evaluator(u_n)
    gap = rho.integrate_poly(lambda x: fu(x) - fn(x), _knots(u, u_n, rho=rho))
    diag = PipelineDiagnostics(
        n=n,
        w1=wasserstein_1d(mu, nu, 1),
        w2=wasserstein_1d(mu, nu, 2),
        l2_error=l2_exact_1d(u, u_n, rho),
        mean_gap=gap,
    )
    return u_n, diag


def tangent_lines(points, a: float = 0.0, b: float = 1.0) -> MaxAffine:
    """Max of tangents of ``x^2 / 2`` at ``points`` (slope s, intercept s^2/2)."""
    s = np.asarray(points, dtype=float)
    return MaxAffine(s.reshape(-1, 1), 0.5 * s * s)


def diagnostics_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "W1", "W2", "L2err"])
    for d in rows:
        w.writerow([d.n, repr(d.w1), repr(d.w2), repr(d.l2_error)])
    return buf.getvalue()
