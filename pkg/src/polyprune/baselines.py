"""Comparison pruners: primal greedy ascent (PGA) and primal greedy descent (PGD)."""
from __future__ import annotations

import numpy as np

from .polyfunc import DomainSpec, MaxAffine, SampleCloud
from .redundancy import SpectralOptions, contribution_values

__all__ = ["pga_prune", "pgd_prune", "cloud_error"]


def _check_budget(n: int, N: int) -> None:
    if not 1 <= n <= N:
        raise ValueError(f"budget n={n} must satisfy 1 <= n <= N={N}")


def cloud_error(u: MaxAffine, S, cloud: SampleCloud) -> float:
    """Weighted gap ``sum_i w_i (u(x_i) - u_S(x_i))`` on a sample cloud."""
    vals = u.affine_values(cloud.points)
    S = np.asarray(list(S), dtype=np.int64)
    return float(cloud.weights @ (vals.max(axis=1) - vals[:, S].max(axis=1)))


def pga_prune(u: MaxAffine, n: int, cloud: SampleCloud) -> np.ndarray:
    """Greedy ascent: start from the best single term, then add the term that
    most reduces the weighted gap on ``cloud``. Returns indices in selection order.
    """
    _check_budget(n, u.n_terms)
    if len(cloud) == 0:
        raise ValueError("empty sample cloud")
    vals = u.affine_values(cloud.points)  # (M, N)
    w = cloud.weights
    # error(S) = w.u - w.max_{k in S} vals, so minimizing error maximizes the
    # weighted value of the current envelope
    first = int(np.argmax(w @ vals))
    selected = [first]
    taken = np.zeros(u.n_terms, dtype=bool)
    taken[first] = True
    env = vals[:, first].copy()
    for _ in range(1, n):
        gain = w @ np.maximum(vals - env[:, None], 0.0)
        gain[taken] = -np.inf
        k = int(np.argmax(gain))
        selected.append(k)
        taken[k] = True
        np.maximum(env, vals[:, k], out=env)
    return np.array(selected, dtype=np.int64)


def pgd_prune(
    u: MaxAffine,
    n: int,
    domain: DomainSpec,
    lazy: bool = False,
    batch: int = 8,
    spectral: SpectralOptions = SpectralOptions(),
) -> np.ndarray:
    """Greedy descent: repeatedly drop the term of least importance
    ``max(0, val(k, S))`` until ``n`` terms remain (lowest index on ties).

    With ``lazy=True`` importances are refreshed only for the current
    front-runners. Removing a competitor never lowers a contribution value, so
    stale values are lower bounds and the argmin found this way matches the
    eager one for exact oracles. Returns the sorted surviving indices.
    """
    N = u.n_terms
    _check_budget(n, N)
    S = np.arange(N)
    if n == N:
        return S

    def importance(ks, S, warm=None):
        vals, wit = contribution_values(u, ks, S, domain, spectral=spectral, warm=warm)
        return np.maximum(vals, 0.0), wit

    if not lazy:
        while S.size > n:
            imp, _ = importance(S, S)
            S = np.delete(S, int(np.argmin(imp)))
        return S

    active = np.ones(N, dtype=bool)
    stale, witness = importance(S, S)
    fresh = np.ones(N, dtype=bool)
    remaining = N
    while remaining > n:
        cand = np.where(active, stale, np.inf)
        j = int(np.argmin(cand))
        if fresh[j]:
            active[j] = False
            remaining -= 1
            fresh[:] = False
            # re-score every survivor at its stored witness: a free, still valid lower bound
            S = np.flatnonzero(active)
            if S.size >= 2:
                vals = np.einsum("kd,ld->kl", witness[S], u.slopes[S]) - u.intercepts[S]
                own = vals.diagonal().copy()
                np.fill_diagonal(vals, -np.inf)
                stale[S] = np.maximum(stale[S], np.maximum(own - vals.max(axis=1), 0.0))
            continue
        S = np.flatnonzero(active)
        order = np.argsort(cand, kind="stable")
        ks = [int(k) for k in order[: min(batch, remaining)] if not fresh[k]]
        new, wit = importance(ks, S, warm=witness[ks])
        stale[ks] = np.maximum(stale[ks], new)
        witness[ks] = wit
        fresh[ks] = True
    return np.flatnonzero(active)
