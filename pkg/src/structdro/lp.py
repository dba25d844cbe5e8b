"""Dense two-phase primal simplex.

Pricing is Dantzig's most-negative reduced cost; after a run of degenerate
pivots the solver switches to Bland's rule, which cannot cycle, until the
objective moves again.

Sized for the small transport LPs used throughout the package (up to a
few thousand variables). Solves

    minimize    c @ x
    subject to  A_ub @ x <= b_ub,  A_eq @ x == b_eq,  x >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, SolverError

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    status: str
    nit: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= np.outer(colv, T[row])


DEGENERATE_RUN = 20


def _run(T: np.ndarray, basis: np.ndarray, ncols: int, tol: float, max_iter: int) -> tuple:
    """Pivot on tableau ``T`` (objective in last row) until optimal.

    Only the first ``ncols`` columns may enter. Returns (status, iterations).
    """
    m = T.shape[0] - 1
    nit = 0
    stalled = 0
    while True:
        reduced = T[-1, :ncols]
        if stalled >= DEGENERATE_RUN:
            candidates = np.flatnonzero(reduced < -tol)
            if candidates.size == 0:
                return OPTIMAL, nit
            col = int(candidates[0])
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -tol:
                return OPTIMAL, nit
        if nit >= max_iter:
            raise SolverError(f"simplex did not terminate within {max_iter} pivots")
        colv = T[:m, col]
        pos = colv > tol
        if not np.any(pos):
            return UNBOUNDED, nit
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / colv[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        row = int(ties[np.argmin(basis[ties])])
        stalled = stalled + 1 if best <= tol else 0
        _pivot(T, row, col)
        basis[row] = col
        nit += 1


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol: float = 1e-10,
            max_iter: int = 50_000) -> LPResult:
    """Minimize ``c @ x`` over the polyhedron; see module docstring."""
    c = np.asarray(c, dtype=float).reshape(-1)
    nvar = c.size
    A_ub = np.zeros((0, nvar)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, nvar)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    if A_ub.shape[1] != nvar or A_eq.shape[1] != nvar:
        raise InputError("constraint matrices must have one column per variable")
    if A_ub.shape[0] != b_ub.size or A_eq.shape[0] != b_eq.size:
        raise InputError("right-hand sides do not match constraint rows")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A_ub)) and np.all(np.isfinite(A_eq))
            and np.all(np.isfinite(b_ub)) and np.all(np.isfinite(b_eq))):
        raise InputError("LP data must be finite")

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    n_std = nvar + m_ub  # structural + slack columns
    A = np.zeros((m, n_std))
    A[:m_ub, :nvar] = A_ub
    A[:m_ub, nvar:] = np.eye(m_ub)
    A[m_ub:, :nvar] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: one artificial per row.
    T = np.zeros((m + 1, n_std + m + 1))
    T[:m, :n_std] = A
    T[:m, n_std:n_std + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n_std] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n_std, n_std + m)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    status, nit1 = _run(T, basis, n_std, tol, max_iter)
    if -T[-1, -1] > 1e-9 * scale:
        return LPResult(np.full(nvar, np.nan), np.nan, INFEASIBLE, nit1)

    # Drive remaining artificials out of the basis; drop redundant rows.
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] >= n_std:
            row = T[r, :n_std]
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if nz.size:
                _pivot(T, r, int(nz[0]))
                basis[r] = int(nz[0])
            else:
                keep[r] = False
    rows = np.flatnonzero(keep)
    T2 = np.zeros((rows.size + 1, n_std + 1))
    T2[:-1, :n_std] = T[rows, :n_std]
    T2[:-1, -1] = T[rows, -1]
    basis = basis[rows]

    # Phase 2.
    cost = np.concatenate([c, np.zeros(m_ub)])
    T2[-1, :n_std] = cost
    T2[-1, -1] = 0.0
    T2[-1] -= cost[basis] @ T2[:-1]
    status, nit2 = _run(T2, basis, n_std, tol, max_iter)
    if status == UNBOUNDED:
        return LPResult(np.full(nvar, np.nan), -np.inf, UNBOUNDED, nit1 + nit2)
    x_std = np.zeros(n_std)
    x_std[basis] = T2[:-1, -1]
    x = np.clip(x_std[:nvar], 0.0, None)
    return LPResult(x, float(c @ x), OPTIMAL, nit1 + nit2)
