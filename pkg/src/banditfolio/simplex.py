"""Dense two-phase primal simplex for small standard-form linear programs.

Solves ``min c @ x  s.t.  A @ x = b, x >= 0`` on a full tableau. Pivoting uses
Dantzig's rule and switches to Bland's rule once too many degenerate pivots
have been made in a row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    """Raised when the simplex method cannot produce an optimal vertex."""


class LPIterationLimit(LPError):
    """Iteration cap reached; ``incumbent`` holds the last basic feasible point."""

    def __init__(self, message: str, incumbent: np.ndarray | None, phase: int):
        super().__init__(message)
        self.incumbent = incumbent
        self.phase = phase


class LPInfeasible(LPError):
    pass


class LPUnbounded(LPError):
    pass


class LPSingular(LPError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    iterations: int
    used_bland: bool


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _iterate(T, basis, n_cols, tol, max_iter, phase, bland_after, state):
    """Run simplex pivots on tableau ``T`` whose last row holds reduced costs."""
    m = T.shape[0] - 1
    degenerate_run = 0
    use_bland = state["bland"]
    while True:
        reduced = T[-1, :n_cols]
        if use_bland:
            candidates = np.flatnonzero(reduced < -tol)
            if candidates.size == 0:
                return
            col = int(candidates[0])
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -tol:
                return
        column = T[:m, col]
        positive = column > tol
        if not positive.any():
            raise LPUnbounded(f"objective unbounded along column {col}")
        ratios = np.full(m, np.inf)
        ratios[positive] = T[:m, -1][positive] / column[positive]
        best = ratios.min()
        # lowest basis label among tied rows keeps Bland's rule cycle-free
        tied = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        row = int(tied[np.argmin(np.asarray(basis)[tied])])
        if abs(T[row, col]) < 1e-11:
            raise LPSingular(f"pivot element {T[row, col]:.3e} at row {row}, column {col}")
        if best <= tol:
            degenerate_run += 1
            if not use_bland and degenerate_run > bland_after:
                use_bland = state["bland"] = True
        else:
            degenerate_run = 0
        _pivot(T, row, col)
        basis[row] = col
        state["iterations"] += 1
        if state["iterations"] >= max_iter:
            x = np.zeros(n_cols)
            for r, b in enumerate(basis):
                if b < n_cols:
                    x[b] = T[r, -1]
            raise LPIterationLimit(
                f"simplex iteration cap {max_iter} reached in phase {phase}",
                incumbent=x if phase == 2 else None,
                phase=phase,
            )


def _solve(c, A, b, tol, max_iter, bland):
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # reuse existing unit columns as the starting basis, add artificials elsewhere
    basis = [-1] * m
    for j in range(n):
        col = A[:, j]
        nz = np.flatnonzero(col)
        if nz.size == 1 and col[nz[0]] == 1.0 and basis[nz[0]] == -1:
            basis[nz[0]] = j
    missing = [r for r in range(m) if basis[r] == -1]
    n_art = len(missing)

    T = np.zeros((m + 1, n + n_art + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    for k, r in enumerate(missing):
        T[r, n + k] = 1.0
        basis[r] = n + k

    state = {"iterations": 0, "bland": bland}
    bland_after = 3 * (m + n)

    if n_art:
        T[-1, n : n + n_art] = 1.0
        for r in missing:
            T[-1] -= T[r]
        _iterate(T, basis, n + n_art, tol, max_iter, 1, bland_after, state)
        if -T[-1, -1] > tol * max(1.0, float(np.abs(b).max())):
            raise LPInfeasible(f"phase 1 ended with infeasibility {-T[-1, -1]:.3e}")
        # drive zero-level artificials out of the basis; drop rows that are redundant
        keep = np.ones(m + 1, dtype=bool)
        for r in range(m):
            if basis[r] >= n:
                nz = np.flatnonzero(np.abs(T[r, :n]) > 1e-9)
                if nz.size:
                    _pivot(T, r, int(nz[0]))
                    basis[r] = int(nz[0])
                else:
                    keep[r] = False
        T = np.delete(T, np.s_[n : n + n_art], axis=1)[keep]
        basis = [bi for bi, k in zip(basis, keep[:m]) if k]

    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, j in enumerate(basis):
        if c[j] != 0.0:
            T[-1] -= c[j] * T[r]
    _iterate(T, basis, n, tol, max_iter, 2, bland_after, state)

    x = np.zeros(n)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    x[x < 0] = 0.0
    return SimplexResult(x=x, objective=float(c @ x), iterations=state["iterations"],
                         used_bland=state["bland"])


def simplex(c, A_eq, b_eq, tol: float = 1e-9, max_iter: int | None = None) -> SimplexResult:
    """Minimise ``c @ x`` subject to ``A_eq @ x == b_eq`` and ``x >= 0``.

    Parameters
    ----------
    c : array of shape (n,)
    A_eq : array of shape (m, n)
    b_eq : array of shape (m,)
    tol : float
        Reduced-cost and ratio-test tolerance.
    max_iter : int, optional
        Pivot cap over both phases; defaults to ``50 * (m + n)``.

    Raises
    ------
    LPInfeasible, LPUnbounded, LPIterationLimit, LPSingular
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A_eq, dtype=float))
    b = np.asarray(b_eq, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError(f"shape mismatch: c {c.shape}, A {A.shape}, b {b.shape}")
    if max_iter is None:
        max_iter = 50 * (m + n)
    try:
        return _solve(c, A, b, tol, max_iter, bland=False)
    except LPSingular:
        # restart from scratch with Bland's rule before giving up
        return _solve(c, A, b, tol, max_iter, bland=True)
