"""Dense tableau simplex for small linear programs in equality form.

Solves::

    minimize    c @ z
    subject to  A @ z == b,  z >= 0

Entering columns are chosen by Dantzig's most-negative reduced cost; after a
run of pivots without objective progress the solver switches for good to
Bland's rule (lowest eligible index for both the entering and the leaving
variable), which cannot cycle.
A feasible starting basis may be supplied; otherwise a phase-one problem with
artificial variables is solved first.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = ["LPResult", "LPError", "InfeasibleLP", "UnboundedLP", "solve_standard_form"]


class LPError(RuntimeError):
    pass


class InfeasibleLP(LPError):
    pass


class UnboundedLP(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    duals: np.ndarray  # y with A.T @ y <= c at optimum; b @ y == fun
    basis: np.ndarray
    n_pivots: int


class _Tableau:
    """Rows 0..m-1 hold B^-1 [A | b]; row m holds reduced costs and -objective."""

    def __init__(self, T: np.ndarray, basis: np.ndarray, tol: float, degenerate_limit: int):
        self.T = T
        self.basis = basis
        self.tol = tol
        self.degenerate_limit = degenerate_limit
        self.pivot_tol = 1e-9
        self.n_pivots = 0

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        # basic values are nonnegative in exact arithmetic; round-off below zero
        # yields negative ratios and lets degenerate pivots wander
        np.maximum(T[:-1, -1], 0.0, out=T[:-1, -1])
        self.basis[r] = j
        self.n_pivots += 1

    def run(self, allowed: np.ndarray, max_iter: int) -> None:
        T = self.T
        m = T.shape[0] - 1
        tol = self.tol
        degenerate_run = 0
        bland = False
        for _ in range(max_iter):
            cost = T[m, :-1]
            eligible = (cost < -tol) & allowed
            if not eligible.any():
                return
            # once switched on, Bland's rule stays on: toggling back can cycle numerically
            bland = bland or degenerate_run >= self.degenerate_limit
            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmin(np.where(eligible, cost, 0.0)))
            col = T[:m, j]
            pos = col > self.pivot_tol * max(1.0, float(np.abs(col).max()))
            if not pos.any():
                raise UnboundedLP("objective is unbounded below")
            ratios = np.full(m, np.inf)
            ratios[pos] = T[:m, -1][pos] / col[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(col[ties])])
            obj = T[m, -1]
            self.pivot(r, j)
            improved = obj - T[m, -1] < -tol * max(1.0, abs(obj))
            degenerate_run = 0 if improved else degenerate_run + 1
        raise LPError(f"simplex did not terminate within {max_iter} pivots")


def _canonical(A, b, c, basis, tol):
    m, n = A.shape
    B = A[:, basis]
    try:
        BinvA = np.linalg.solve(B, np.column_stack([A, b]))
    except np.linalg.LinAlgError:
        return None
    if np.any(BinvA[:, -1] < -tol * max(1.0, np.abs(b).max(initial=0.0))):
        return None
    BinvA[:, -1] = np.maximum(BinvA[:, -1], 0.0)
    T = np.empty((m + 1, n + 1))
    T[:m] = BinvA
    cb = c[basis]
    T[m, :-1] = c - cb @ BinvA[:, :-1]
    T[m, -1] = -cb @ BinvA[:, -1]
    return T


def solve_standard_form(
    c: Sequence[float],
    A: np.ndarray,
    b: Sequence[float],
    basis: Optional[Sequence[int]] = None,
    tol: float = 1e-10,
    max_iter: int = 50_000,
    degenerate_limit: int = 20,
) -> LPResult:
    """Minimize ``c @ z`` subject to ``A @ z == b`` and ``z >= 0``.

    Raises :class:`InfeasibleLP` or :class:`UnboundedLP` as appropriate.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).reshape(-1)
    c = np.array(c, dtype=float).reshape(-1)
    m, n = A.shape
    if b.shape[0] != m or c.shape[0] != n:
        raise ValueError("inconsistent LP dimensions")

    T = None
    if basis is not None:
        basis = np.array(basis, dtype=np.int64)
        if basis.shape != (m,):
            raise ValueError("basis must name one column per row")
        T = _canonical(A, b, c, basis, tol)

    if T is None:
        # phase one on [A | I] with artificial basis
        sign = np.where(b < 0, -1.0, 1.0)
        A1 = np.column_stack([A * sign[:, None], np.eye(m)])
        b1 = b * sign
        c1 = np.concatenate([np.zeros(n), np.ones(m)])
        basis = np.arange(n, n + m)
        T1 = np.empty((m + 1, n + m + 1))
        T1[:m, :-1] = A1
        T1[:m, -1] = b1
        T1[m, :-1] = c1 - A1.sum(axis=0)
        T1[m, -1] = -b1.sum()
        tab = _Tableau(T1, basis, tol, degenerate_limit)
        tab.run(np.ones(n + m, dtype=bool), max_iter)
        scale = max(1.0, np.abs(b1).max(initial=0.0))
        if -tab.T[m, -1] > 1e-8 * scale:
            raise InfeasibleLP(f"infeasible (phase-one residual {-tab.T[m, -1]:.3e})")
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tab.basis[r] >= n:
                row = tab.T[r, :n]
                cand = np.flatnonzero(np.abs(row) > 1e-9)
                if cand.size:
                    tab.pivot(r, int(cand[np.argmax(np.abs(row[cand]))]))
                else:
                    keep[r] = False
        rows = np.flatnonzero(keep)
        m_full = m
        A, b = A[rows], b[rows]
        basis = tab.basis[rows].copy()
        n_phase1 = tab.n_pivots
        T = _canonical(A, b, c, basis, 1e-7)
        if T is None:
            raise LPError("failed to rebuild tableau after phase one")
        m = A.shape[0]
    else:
        n_phase1 = 0
        rows, m_full = np.arange(m), m

    tab = _Tableau(T, basis, tol, degenerate_limit)
    tab.run(np.ones(n, dtype=bool), max_iter)
    # refactor from the final basis to shed accumulated round-off, then polish
    for _ in range(3):
        T = _canonical(A, b, c, tab.basis, 1e-7)
        if T is None:
            break
        polished = _Tableau(T, tab.basis.copy(), tol, 0)
        polished.run(np.ones(n, dtype=bool), max_iter)
        polished.n_pivots += tab.n_pivots
        done = polished.n_pivots == tab.n_pivots
        tab = polished
        if done:
            break

    x = np.zeros(n)
    x[tab.basis] = tab.T[:m, -1]
    fun = float(c @ x)
    Bt = A[:, tab.basis].T
    duals = np.zeros(m_full)
    try:
        duals[rows] = np.linalg.solve(Bt, c[tab.basis])
    except np.linalg.LinAlgError:
        duals[rows] = np.linalg.lstsq(Bt, c[tab.basis], rcond=None)[0]
    return LPResult(x=x, fun=fun, duals=duals, basis=tab.basis.copy(), n_pivots=n_phase1 + tab.n_pivots)
