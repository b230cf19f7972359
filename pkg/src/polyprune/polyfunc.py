"""Max-affine (polyhedral convex) functions, certification domains and metrics.

A max-affine function is stored as a slope matrix ``Q`` of shape ``(N, d)``
and an intercept vector ``p`` of shape ``(N,)``::

    u(x) = max_k <Q[k], x> - p[k]

Min-plus ensembles ``inf_l c_l + <P_l, x>`` are carried by the same type
through ``-max_l (<-P_l, x> - c_l)``; see :func:`from_min_plus`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

__all__ = [
    "MaxAffine",
    "Box",
    "SpectralBall",
    "SampleCloud",
    "DomainSpec",
    "PolyFileError",
    "from_min_plus",
    "to_min_plus",
    "l2_grid_distance",
    "mean_abs_distance",
    "linf_sample_gap",
    "box_grid",
    "load",
    "save",
]


def _as_index_array(S, n_terms: int) -> np.ndarray:
    idx = np.asarray(list(S) if not isinstance(S, np.ndarray) else S, dtype=np.int64)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("index set must be a nonempty 1-D collection")
    if idx.min() < 0 or idx.max() >= n_terms:
        raise IndexError(f"index set out of range [0, {n_terms})")
    return idx


@dataclass(frozen=True, eq=False)
class MaxAffine:
    """Convex function ``x -> max_k <slopes[k], x> - intercepts[k]``.

    Duplicate terms are allowed; removing them is the job of
    :mod:`polyprune.redundancy`.
    """

    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        Q = np.array(self.slopes, dtype=float, copy=True)
        p = np.array(self.intercepts, dtype=float, copy=True).reshape(-1)
        if Q.ndim == 1:
            Q = Q.reshape(-1, 1)
        if Q.ndim != 2 or Q.shape[1] < 1:
            raise ValueError("slopes must have shape (N, d) with d >= 1")
        if Q.shape[0] < 1:
            raise ValueError("a max-affine function needs at least one term")
        if Q.shape[0] != p.shape[0]:
            raise ValueError(f"{Q.shape[0]} slopes but {p.shape[0]} intercepts")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(p))):
            raise ValueError("slopes and intercepts must be finite")
        Q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "slopes", Q)
        object.__setattr__(self, "intercepts", p)

    @classmethod
    def from_terms(cls, terms: Sequence[Sequence[float]]) -> "MaxAffine":
        """Build from rows ``[q_1, ..., q_d, p]``."""
        arr = np.asarray(terms, dtype=float)
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise ValueError("terms must be rows of length d + 1 >= 2")
        return cls(arr[:, :-1], arr[:, -1])

    @property
    def dim(self) -> int:
        return self.slopes.shape[1]

    @property
    def n_terms(self) -> int:
        return self.slopes.shape[0]

    def __len__(self) -> int:
        return self.n_terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, MaxAffine):
            return NotImplemented
        return (
            self.slopes.shape == other.slopes.shape
            and np.array_equal(self.slopes, other.slopes)
            and np.array_equal(self.intercepts, other.intercepts)
        )

    __hash__ = None

    def lifted_points(self, intercept_weight: float = 1.0) -> np.ndarray:
        """Points ``(q_k, beta * p_k)`` in R^{d+1}, one row per term."""
        return np.column_stack([self.slopes, intercept_weight * self.intercepts])

    def _check_points(self, x) -> np.ndarray:
        X = np.asarray(x, dtype=float)
        if X.ndim == 0:
            X = X.reshape(1)
        if X.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {X.shape[-1]}")
        return X

    def affine_values(self, x) -> np.ndarray:
        """Values of every term: shape ``(..., N)``."""
        X = self._check_points(x)
        return X @ self.slopes.T - self.intercepts

    def __call__(self, x) -> Union[float, np.ndarray]:
        """Evaluate at one point (returns float) or a batch ``(M, d)``."""
        vals = self.affine_values(x)
        out = vals.max(axis=-1)
        return float(out) if out.ndim == 0 else out

    def argmax(self, x) -> Union[int, np.ndarray]:
        """Index of the active term; ties go to the lowest index."""
        vals = self.affine_values(x)
        out = vals.argmax(axis=-1)
        return int(out) if np.ndim(out) == 0 else out

    def eval(self, x) -> tuple[float, int]:
        """Value and active-term index at a single point."""
        X = self._check_points(x)
        if X.ndim != 1:
            raise ValueError("eval takes a single point; use __call__ for batches")
        vals = self.slopes @ X - self.intercepts
        k = int(np.argmax(vals))
        return float(vals[k]), k

    def restrict(self, S) -> "MaxAffine":
        """Sub-function keeping only the terms in ``S`` (order preserved)."""
        idx = _as_index_array(S, self.n_terms)
        return MaxAffine(self.slopes[idx], self.intercepts[idx])

    def terms(self) -> list[list[float]]:
        return np.column_stack([self.slopes, self.intercepts]).tolist()


def from_min_plus(constants, slopes) -> MaxAffine:
    """Encode ``inf_l c_l + <P_l, x>`` as ``-u`` with ``u = max_l <-P_l, x> - c_l``."""
    P = np.asarray(slopes, dtype=float)
    return MaxAffine(-P, np.asarray(constants, dtype=float))


def to_min_plus(u: MaxAffine) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`from_min_plus`: returns ``(c, P)``."""
    return u.intercepts.copy(), -u.slopes


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("Box bounds must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("Box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("Box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, dim: int, lo: float, hi: float) -> "Box":
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def corners(self) -> np.ndarray:
        if self.dim > 16:
            raise ValueError("too many corners to enumerate")
        bits = (np.arange(2 ** self.dim)[:, None] >> np.arange(self.dim)) & 1
        return np.where(bits == 1, self.hi, self.lo)


@dataclass(frozen=True)
class SpectralBall:
    """Operator-norm ball ``{X in C^{rows x cols} : ||X||_op <= radius}``.

    Points are handled in flattened real form (row-major, interleaved real and
    imaginary parts), see :func:`polyprune.quantum.flatten`.
    """

    rows: int
    cols: int
    radius: float = 1.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("SpectralBall shape must be positive")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("SpectralBall radius must be positive")

    @property
    def dim(self) -> int:
        return 2 * self.rows * self.cols

    def to_matrices(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = x[..., 0::2] + 1j * x[..., 1::2]
        return z.reshape(x.shape[:-1] + (self.rows, self.cols))

    def from_matrices(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        flat = Z.reshape(Z.shape[:-2] + (self.rows * self.cols,))
        out = np.empty(flat.shape[:-1] + (2 * flat.shape[-1],))
        out[..., 0::2] = flat.real
        out[..., 1::2] = flat.imag
        return out

    def project(self, x: np.ndarray) -> np.ndarray:
        """Euclidean projection: clip singular values at the radius."""
        Z = self.to_matrices(x)
        # eigh of the small Gram matrix is cheaper than a batched SVD; only
        # singular values above the radius are rescaled, so squaring them is harmless
        w, V = np.linalg.eigh(np.swapaxes(Z.conj(), -1, -2) @ Z)
        sigma = np.sqrt(np.maximum(w, 0.0))
        scale = np.where(sigma > self.radius, self.radius / np.maximum(sigma, self.radius), 1.0)
        return self.from_matrices(Z @ ((V * scale[..., None, :]) @ np.swapaxes(V.conj(), -1, -2)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        Z = rng.standard_normal((n, self.rows, self.cols)) + 1j * rng.standard_normal(
            (n, self.rows, self.cols)
        )
        nrm = np.linalg.norm(Z, ord=2, axis=(1, 2))
        scale = self.radius * rng.uniform(0.0, 1.0, size=n) ** (1.0 / self.dim) / nrm
        return self.from_matrices(Z * scale[:, None, None])


@dataclass(frozen=True, eq=False)
class SampleCloud:
    points: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        X = np.asarray(self.points, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("SampleCloud needs a nonempty (M, d) array of points")
        if self.weights is None:
            w = np.full(X.shape[0], 1.0 / X.shape[0])
        else:
            w = np.asarray(self.weights, dtype=float).reshape(-1)
            if w.shape[0] != X.shape[0]:
                raise ValueError("one weight per sample point is required")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("SampleCloud weights must be finite and nonnegative")
            total = w.sum()
            if total <= 0:
                raise ValueError("SampleCloud weights must not all be zero")
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"SampleCloud weights sum to {total}, expected 1")
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


DomainSpec = Union[Box, SpectralBall, SampleCloud]


# ---------------------------------------------------------------------------
# Metrics


def default_resolution(dim: int) -> int:
    if dim <= 2:
        return 101
    if dim == 3:
        return 21
    raise ValueError("Box quadrature is limited to d <= 3; pass a SampleCloud instead")


def box_grid(box: Box, resolution: int | None = None) -> SampleCloud:
    """Midpoint tensor grid with equal weights (``resolution`` points per axis)."""
    res = default_resolution(box.dim) if resolution is None else int(resolution)
    if res < 1:
        raise ValueError("resolution must be positive")
    axes = [lo + (hi - lo) * (np.arange(res) + 0.5) / res for lo, hi in zip(box.lo, box.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return SampleCloud(pts)


def _quadrature(domain: DomainSpec, resolution: int | None) -> SampleCloud:
    if isinstance(domain, SampleCloud):
        return domain
    if isinstance(domain, Box):
        return box_grid(domain, resolution)
    raise TypeError(f"grid metrics need a Box or SampleCloud domain, got {type(domain).__name__}")


def _check_same_dim(u: MaxAffine, v: MaxAffine, domain) -> None:
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} vs {v.dim}")
    if domain.dim != u.dim:
        raise ValueError(f"domain has dimension {domain.dim}, functions have {u.dim}")


def l2_grid_distance(u: MaxAffine, v: MaxAffine, domain: DomainSpec, resolution: int | None = None) -> float:
    """``(sum_i w_i (u(x_i) - v(x_i))^2)^(1/2)`` over a grid or sample cloud."""
    _check_same_dim(u, v, domain)
    cloud = _quadrature(domain, resolution)
    diff = u(cloud.points) - v(cloud.points)
    return float(np.sqrt(np.dot(cloud.weights, diff * diff)))


def mean_abs_distance(u: MaxAffine, v: MaxAffine, domain: DomainSpec, resolution: int | None = None) -> float:
    """Weighted mean of ``|u - v|`` (the L1(rho) analogue of :func:`l2_grid_distance`)."""
    _check_same_dim(u, v, domain)
    cloud = _quadrature(domain, resolution)
    return float(np.dot(cloud.weights, np.abs(u(cloud.points) - v(cloud.points))))


def linf_sample_gap(u: MaxAffine, S, domain: SampleCloud) -> float:
    """``max_i u(x_i) - u_S(x_i)``; nonnegative because ``u_S <= u``."""
    if not isinstance(domain, SampleCloud):
        raise TypeError("linf_sample_gap needs a SampleCloud")
    if domain.dim != u.dim:
        raise ValueError(f"domain has dimension {domain.dim}, function has {u.dim}")
    vals = u.affine_values(domain.points)
    idx = _as_index_array(S, u.n_terms)
    gap = vals.max(axis=1) - vals[:, idx].max(axis=1)
    return float(gap.max())


# ---------------------------------------------------------------------------
# File format: {"dim": d, "terms": [[q_1, ..., q_d, p], ...]}


class PolyFileError(ValueError):
    """Malformed polyhedral-function file."""


def save(u: MaxAffine, path) -> None:
    # json writes floats with repr(), which round-trips doubles exactly
    doc = {"dim": u.dim, "terms": u.terms()}
    Path(path).write_text(json.dumps(doc) + "\n")


def loads(text: str, source: str = "<string>") -> MaxAffine:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolyFileError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise PolyFileError(f"{source}: top level must be an object")
    for key in ("dim", "terms"):
        if key not in doc:
            raise PolyFileError(f"{source}: missing field '{key}'")
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise PolyFileError(f"{source}: field 'dim' must be a positive integer")
    terms = doc["terms"]
    if not isinstance(terms, list) or not terms:
        raise PolyFileError(f"{source}: field 'terms' must be a nonempty list")
    rows = []
    for i, row in enumerate(terms):
        if not isinstance(row, list) or len(row) != dim + 1:
            raise PolyFileError(f"{source}: terms[{i}] must be a list of {dim + 1} numbers")
        for j, val in enumerate(row):
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise PolyFileError(f"{source}: terms[{i}][{j}] is not a number")
            if not math.isfinite(val):
                raise PolyFileError(f"{source}: terms[{i}][{j}] is not finite")
        rows.append([float(v) for v in row])
    return MaxAffine.from_terms(rows)


def load(path) -> MaxAffine:
    path = Path(path)
    return loads(path.read_text(), source=str(path))
