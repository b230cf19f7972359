"""Vertex certification for the lifted Newton polytope over a domain D.

For a term ``k`` competing against a set ``S`` the contribution value is::

    val(k, S) = max_{x in D} min_{l in S, l != k} <q_k - q_l, x> - (p_k - p_l)

i.e. the largest margin by which term ``k`` beats every other term of ``S``
somewhere in ``D``. Negative values mean the term never attains the maximum
on ``D`` and can be dropped without changing the function there.

* ``Box``: exact, by linear programming (the dual LP over the simplex of
  constraint multipliers is solved; its optimal multipliers give the witness).
* ``SampleCloud``: exact maximum over the samples.
* ``SpectralBall``: projected supergradient ascent; the returned value is
  attained at a feasible point, so it is a lower bound on the true maximum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .polyfunc import Box, DomainSpec, MaxAffine, SampleCloud, SpectralBall
from .simplex import LPError, solve_standard_form

__all__ = [
    "SpectralOptions",
    "RedundancyError",
    "contribution_value",
    "contribution_values",
    "dedup_terms",
    "prune_redundant",
]

log = logging.getLogger(__name__)

BOX_TOL = 1e-9
SPECTRAL_TOL = 1e-6


class RedundancyError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralOptions:
    iterations: int = 500
    restarts: int = 5
    step: float = 1.0  # step t is step * radius / sqrt(t)
    seed: int = 0
    chunk: int = 4096  # max rows (terms x restarts) per batched ascent


# ---------------------------------------------------------------------------
# oracles


def _box_lp(A: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """``max_{x in [lo, hi]} min_l a_l.x - b_l`` and a maximizer.

    Solved through its dual ``min_{lam in simplex} sum_j max(g_j lo_j, g_j hi_j) - lam.b``
    with ``g = A.T lam`` split as ``s - t``; the equality-row multipliers are ``(v, -x)``.
    """
    m, d = A.shape
    n_var = m + 2 * d
    E = np.zeros((d + 1, n_var))
    E[0, :m] = 1.0
    E[1:, :m] = A.T
    E[1:, m : m + d] = -np.eye(d)
    E[1:, m + d :] = np.eye(d)
    f = np.zeros(d + 1)
    f[0] = 1.0
    c = np.concatenate([-b, hi, -lo])
    single = np.maximum(A * lo, A * hi).sum(axis=1) - b
    l0 = int(np.argmin(single))
    basis = [l0] + [m + j if A[l0, j] >= 0 else m + d + j for j in range(d)]
    res = solve_standard_form(c, E, f, basis=basis)
    x = np.clip(-res.duals[1:], lo, hi)
    return res.fun, x


def _sample_values(vals: np.ndarray, cols: np.ndarray):
    """Per-term best margin over samples; ``vals`` is ``(M, |S|)``."""
    if vals.shape[1] < 2:
        raise ValueError("contribution needs at least two terms")
    top = np.argmax(vals, axis=1)
    rows = np.arange(vals.shape[0])
    best = vals[rows, top]
    masked = vals.copy()
    masked[rows, top] = -np.inf
    second = masked.max(axis=1)
    out = np.empty(cols.shape[0])
    arg = np.empty(cols.shape[0], dtype=np.int64)
    for i, c in enumerate(cols):
        comp = np.where(top == c, second, best)
        margin = vals[:, c] - comp
        arg[i] = int(np.argmax(margin))
        out[i] = margin[arg[i]]
    return out, arg


def _polar_starts(ball: SpectralBall, Qk: np.ndarray) -> np.ndarray:
    """Maximizer of ``<q_k, X>`` over the ball: radius times the polar factor of ``q_k``."""
    Z = ball.to_matrices(Qk)
    U, _, Vh = np.linalg.svd(Z)
    return ball.from_matrices(ball.radius * (U @ Vh))


def _spectral_ascent(Q, p, ks, ball: SpectralBall, opts: SpectralOptions, warm=None):
    """Batched projected supergradient ascent of ``f_k(x) = T_k(x) - max_{l != k} T_l(x)``.

    ``Q, p`` hold the competing set S; ``ks`` are column indices into S.
    Returns best values and the feasible points attaining them.
    """
    rng = np.random.default_rng(opts.seed)
    K = len(ks)
    starts = [_polar_starts(ball, Q[ks])[:, None, :]]
    if warm is not None:
        starts.append(np.asarray(warm, dtype=float)[:, None, :])
    n_random = max(opts.restarts - len(starts), 0)
    if n_random:
        starts.append(ball.sample(K * n_random, rng).reshape(K, n_random, -1))
    X0 = np.concatenate(starts, axis=1)  # (K, R, D)
    R = X0.shape[1]
    D = X0.shape[2]

    best_val = np.full(K, -np.inf)
    best_x = X0[:, 0, :].copy()
    per_chunk = max(1, opts.chunk // R)
    for lo in range(0, K, per_chunk):
        hi = min(K, lo + per_chunk)
        kk = np.repeat(np.asarray(ks[lo:hi]), R)
        X = X0[lo:hi].reshape(-1, D).copy()
        rows = np.arange(X.shape[0])
        Qk, pk = Q[kk], p[kk]
        chunk_best = np.full(X.shape[0], -np.inf)
        chunk_x = X.copy()
        for t in range(opts.iterations + 1):
            vals = X @ Q.T - p
            own = vals[rows, kk]
            vals[rows, kk] = -np.inf
            comp = np.argmax(vals, axis=1)
            f = own - vals[rows, comp]
            better = f > chunk_best
            chunk_best[better] = f[better]
            chunk_x[better] = X[better]
            if t == opts.iterations:
                break
            g = Qk - Q[comp]
            gn = np.linalg.norm(g, axis=1)
            gn[gn == 0] = 1.0
            X = ball.project(X + (opts.step * ball.radius / np.sqrt(t + 1.0)) * g / gn[:, None])
        cb = chunk_best.reshape(hi - lo, R)
        pick = np.argmax(cb, axis=1)
        best_val[lo:hi] = cb[np.arange(hi - lo), pick]
        best_x[lo:hi] = chunk_x.reshape(hi - lo, R, D)[np.arange(hi - lo), pick]
    return best_val, best_x


def contribution_values(
    u: MaxAffine,
    ks,
    S,
    domain: DomainSpec,
    spectral: SpectralOptions = SpectralOptions(),
    warm=None,
):
    """Contribution values of several terms ``ks`` (each must lie in ``S``).

    Returns ``(values, witnesses)``; ``witnesses[i]`` is a point of ``D``
    attaining ``values[i]``.
    """
    S = np.asarray(list(S), dtype=np.int64)
    ks = np.asarray(list(ks), dtype=np.int64)
    if S.size < 2:
        raise ValueError("contribution needs |S| >= 2")
    pos = {int(s): i for i, s in enumerate(S)}
    if len(pos) != S.size:
        raise ValueError("S contains repeated indices")
    try:
        cols = np.array([pos[int(k)] for k in ks], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"term {exc.args[0]} is not in S") from None
    if domain.dim != u.dim:
        raise ValueError(f"domain has dimension {domain.dim}, function has {u.dim}")
    Q, p = u.slopes[S], u.intercepts[S]

    if isinstance(domain, SampleCloud):
        vals = domain.points @ Q.T - p
        out, arg = _sample_values(vals, cols)
        return out, domain.points[arg]

    if isinstance(domain, Box):
        out = np.empty(cols.size)
        wit = np.empty((cols.size, u.dim))
        for i, c in enumerate(cols):
            others = np.delete(np.arange(S.size), c)
            A = Q[c] - Q[others]
            b = p[c] - p[others]
            try:
                out[i], wit[i] = _box_lp(A, b, domain.lo, domain.hi)
            except LPError as exc:
                raise RedundancyError(f"LP for term {int(S[c])} failed: {exc}") from exc
        return out, wit

    if isinstance(domain, SpectralBall):
        return _spectral_ascent(Q, p, cols, domain, spectral, warm=warm)

    raise TypeError(f"unsupported domain {type(domain).__name__}")


def contribution_value(u: MaxAffine, k: int, S, domain: DomainSpec, **kwargs) -> float:
    """Contribution value of term ``k`` against ``S`` over ``domain``."""
    vals, _ = contribution_values(u, [k], S, domain, **kwargs)
    return float(vals[0])


# ---------------------------------------------------------------------------
# preprocessing


def dedup_terms(u: MaxAffine, rtol: float = 1e-12) -> np.ndarray:
    """Indices of the first occurrence of each term, merging near-identical rows.

    Two terms are merged when every coordinate of ``(q, p)`` agrees within
    ``rtol * max(1, max |coefficient|)``.
    """
    L = u.lifted_points()
    N = L.shape[0]
    atol = rtol * max(1.0, float(np.abs(L).max()))
    keep = np.ones(N, dtype=bool)
    for lo in range(0, N, 256):
        hi = min(N, lo + 256)
        near = np.abs(L[lo:hi, None, :] - L[None, :hi, :]).max(axis=2) <= atol
        for i in range(lo, hi):
            if np.any(near[i - lo, :i] & keep[:i]):
                keep[i] = False
    return np.flatnonzero(keep)


def _box_screen(u: MaxAffine, box: Box) -> np.ndarray:
    """Margin of each term at cheap candidate corners (lower bound of val(k, [N]))."""
    Q, p = u.slopes, u.intercepts
    dirs = [np.sign(Q - Q.mean(axis=0)), np.sign(Q)]
    best = np.full(u.n_terms, -np.inf)
    for s in dirs:
        X = np.where(s > 0, box.hi, np.where(s < 0, box.lo, 0.5 * (box.lo + box.hi)))
        vals = X @ Q.T - p
        own = vals[np.arange(u.n_terms), np.arange(u.n_terms)].copy()
        np.fill_diagonal(vals, -np.inf)
        best = np.maximum(best, own - vals.max(axis=1))
    return best


def prune_redundant(
    u: MaxAffine,
    domain: DomainSpec,
    tol: float | None = None,
    spectral: SpectralOptions = SpectralOptions(),
    validate: int = 1000,
    seed: int = 0,
    dedup: bool = True,
) -> np.ndarray:
    """Drop terms that never attain the maximum on ``domain``.

    Visits ``k = 0..N-1`` in order and removes ``k`` from the active set ``A``
    when ``val(k, A) < -tol``. Exact duplicates (value exactly 0 against each
    other) are merged first, keeping the lowest index. Terms certified
    nonnegative against all of ``[N]`` skip the sequential solve: their value
    can only grow as ``A`` shrinks.

    Returns the sorted surviving indices.
    """
    if tol is None:
        tol = SPECTRAL_TOL if isinstance(domain, SpectralBall) else BOX_TOL
    A = dedup_terms(u) if dedup else np.arange(u.n_terms)
    if A.size < 2:
        return A

    sub = u.restrict(A)
    if isinstance(domain, Box):
        lower = _box_screen(sub, domain)
    else:
        lower, _ = contribution_values(sub, np.arange(A.size), np.arange(A.size), domain, spectral=spectral)
    certain = lower >= -tol

    active = np.ones(A.size, dtype=bool)
    for c in range(A.size):
        if certain[c] or active.sum() < 2:
            continue
        S = np.flatnonzero(active)
        if isinstance(domain, Box) or isinstance(domain, SampleCloud):
            val = contribution_value(sub, c, S, domain)
        else:
            val = contribution_value(sub, c, S, domain, spectral=spectral)
        if val < -tol:
            active[c] = False
    kept = A[active]

    if validate:
        _validate(u, kept, domain, validate, seed, tol)
    return kept


def _validate(u: MaxAffine, kept, domain, n: int, seed: int, tol: float) -> None:
    rng = np.random.default_rng(seed)
    if isinstance(domain, SampleCloud):
        X = domain.points
    else:
        X = domain.sample(n, rng)
    gap = np.abs(u(X) - u.restrict(kept)(X))
    scale = max(1.0, float(np.abs(u.lifted_points()).max()))
    limit = max(tol, 1e-9) * 10 * scale
    if gap.max() > limit:
        raise RedundancyError(f"pruned function deviates by {gap.max():.3e} on validation samples")
