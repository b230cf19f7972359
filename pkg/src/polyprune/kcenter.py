"""Greedy k-center selection over the lifted Newton polytope vertices.

Each affine term ``<q_k, x> - p_k`` is the point ``(q_k, p_k)`` of R^{d+1}.
Picking ``n`` centers that cover all points within radius ``E`` bounds the
pruning error: ``0 <= u_N(x) - u_S(x) <= E * ||(x, 1)||_*``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PruneResult",
    "greedy_kcenter",
    "kcenter_cost",
    "brute_force_kcenter",
    "kcenter_error_bound",
    "dual_norm",
    "default_start",
]

EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class PruneResult:
    selected: tuple[int, ...]
    radius: float
    norm_spec: str = EUCLIDEAN

    def __len__(self) -> int:
        return len(self.selected)


def _points(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("points must be a nonempty (N, m) array")
    return P


def default_start(points) -> int:
    """Index of the point with the largest Euclidean norm (lowest index on ties)."""
    P = _points(points)
    return int(np.argmax(np.einsum("ij,ij->i", P, P)))


def greedy_kcenter(points, n: int, start: int | None = None) -> PruneResult:
    """Farthest-point traversal (Gonzalez): a 2-approximation of the k-center optimum.

    ``selected`` lists indices in selection order and always begins with
    ``start``. Ties in the farthest-point search go to the lowest index.
    """
    P = _points(points)
    N = P.shape[0]
    if not 1 <= n <= N:
        raise ValueError(f"budget n={n} must satisfy 1 <= n <= N={N}")
    if start is None:
        start = default_start(P)
    if not 0 <= start < N:
        raise IndexError(f"start index {start} out of range")

    selected = [int(start)]
    dist = np.full(N, np.inf)
    taken = np.zeros(N, dtype=bool)
    r = int(start)
    for t in range(n):
        if t:
            r = int(np.argmax(np.where(taken, -1.0, dist)))
            selected.append(r)
        taken[r] = True
        diff = P - P[r]
        np.minimum(dist, np.sqrt(np.einsum("ij,ij->i", diff, diff)), out=dist)
    dist[taken] = 0.0
    return PruneResult(tuple(selected), float(dist.max()))


def kcenter_cost(points, S) -> float:
    """``max_k min_{l in S} ||pt_k - pt_l||``."""
    P = _points(points)
    idx = np.asarray(list(S), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("center set must be nonempty")
    d = np.full(P.shape[0], np.inf)
    for r in idx:
        diff = P - P[r]
        np.minimum(d, np.sqrt(np.einsum("ij,ij->i", diff, diff)), out=d)
    d[idx] = 0.0
    return float(d.max())


def brute_force_kcenter(points, n: int, max_subsets: int = 10**6) -> PruneResult:
    """Exact k-center by enumerating every ``n``-subset (test oracle).

    Returns the lexicographically smallest optimal subset.
    """
    P = _points(points)
    N = P.shape[0]
    if not 1 <= n <= N:
        raise ValueError(f"budget n={n} must satisfy 1 <= n <= N={N}")
    if math.comb(N, n) > max_subsets:
        raise ValueError(f"C({N},{n}) exceeds the enumeration budget of {max_subsets}")
    D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=-1))
    best, best_S = math.inf, None
    for S in itertools.combinations(range(N), n):
        r = float(D[:, S].min(axis=1).max())
        if r < best:
            best, best_S = r, S
    return PruneResult(tuple(best_S), best)


def dual_norm(x, norm_spec: str = EUCLIDEAN) -> float:
    """Dual norm of ``(x, 1)``; the Euclidean norm is self-dual."""
    if norm_spec != EUCLIDEAN:
        raise ValueError(f"unsupported norm {norm_spec!r}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(np.sqrt(x @ x + 1.0))


def kcenter_error_bound(radius: float, x, norm_spec: str = EUCLIDEAN, intercept_weight: float = 1.0) -> float:
    """Upper bound ``radius * ||(x, 1)||_*`` on ``u_N(x) - u_S(x)``.

    With an intercept weight ``beta`` the clustering runs on ``(q, beta p)``,
    whose dual pairing vector is ``(x, 1/beta)``.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if intercept_weight == 1.0:
        return radius * dual_norm(x, norm_spec)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return radius * float(np.sqrt(x @ x + 1.0 / intercept_weight**2))
