"""Empirical VaR/CVaR estimators and CVaR-minimising portfolio weights.

Losses are negated portfolio returns. The portfolio problem is the
Rockafellar-Uryasev reduction: minimise

    alpha + 1 / (m (1 - gamma)) * sum_s max(-u @ r_s - alpha, 0)

over long-only weights ``u`` on the simplex and a free threshold ``alpha``,
written as a linear program with one epigraph variable per scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simplex import LPIterationLimit, simplex

DEFAULT_GAMMA = 0.95


def _check_level(level: float, name: str) -> None:
    if not 0.0 < level < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {level!r}")


def _losses(losses) -> np.ndarray:
    arr = np.asarray(losses, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("loss sample is empty")
    return arr


def empirical_var(losses, beta: float) -> float:
    """Value-at-risk: the ``ceil(beta * m)``-th smallest of ``m`` losses.

    This is the smallest threshold ``x`` with at most a ``1 - beta`` fraction
    of the sample strictly above ``x``.
    """
    _check_level(beta, "beta")
    arr = np.sort(_losses(losses))
    # rounding guards products like 0.7 * 10 = 7.000000000000001
    k = max(1, math.ceil(round(beta * arr.size, 9)))
    return float(arr[k - 1])


def empirical_cvar(losses, gamma: float) -> float:
    """Conditional value-at-risk of an equally weighted loss sample.

    Minimises the scalar objective ``a + mean(max(L - a, 0)) / (1 - gamma)``.
    The objective is piecewise linear and convex in ``a`` with kinks at the
    sample points, so the minimum is attained at one of them.
    """
    _check_level(gamma, "gamma")
    arr = np.sort(_losses(losses))
    m = arr.size
    # tail_sum[j] = sum_{i > j} (L_i - L_j) over the sorted sample
    suffix = np.cumsum(arr[::-1])[::-1]
    above = np.append(suffix[1:], 0.0)
    n_above = m - 1 - np.arange(m)
    tail_sum = above - n_above * arr
    values = arr + tail_sum / ((1.0 - gamma) * m)
    return float(values.min())


def performance_function(weights, alpha: float, scenarios, gamma: float) -> float:
    """Evaluate the sample performance function at ``(weights, alpha)``."""
    scenarios = np.atleast_2d(np.asarray(scenarios, dtype=float))
    losses = -scenarios @ np.asarray(weights, dtype=float)
    excess = np.maximum(losses - alpha, 0.0)
    return float(alpha + excess.sum() / (scenarios.shape[0] * (1.0 - gamma)))


@dataclass(frozen=True)
class CvarProblem:
    """Scenario set for one CVaR minimisation.

    ``scenarios`` has shape (m, k): one row of asset returns per scenario.
    """

    scenarios: np.ndarray
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        sc = np.atleast_2d(np.asarray(self.scenarios, dtype=float))
        object.__setattr__(self, "scenarios", sc)
        _check_level(self.gamma, "gamma")
        if sc.shape[0] < 1 or sc.shape[1] < 1:
            raise ValueError(f"need at least one scenario and one asset, got shape {sc.shape}")
        if not np.isfinite(sc).all():
            raise ValueError("scenario returns must be finite")

    @property
    def k(self) -> int:
        return self.scenarios.shape[1]

    @property
    def m(self) -> int:
        return self.scenarios.shape[0]


@dataclass(frozen=True)
class LinearProgram:
    """``min c @ x`` s.t. ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``, ``lower <= x <= upper``.

    Variables are ordered ``(u_1..u_k, alpha, z_1..z_m)``.
    """

    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    k: int
    m: int
    problem: CvarProblem

    def to_text(self) -> str:
        """Plain-text tableau dump, one constraint per line."""
        names = [f"u{i + 1}" for i in range(self.k)] + ["alpha"] + [f"z{s + 1}" for s in range(self.m)]
        fmt = lambda row: " ".join(f"{v:+.6g}" for v in row)  # noqa: E731
        lines = ["vars " + " ".join(names), "min  " + fmt(self.c)]
        lines += ["le   " + fmt(row) + f" | {rhs:+.6g}" for row, rhs in zip(self.A_ub, self.b_ub)]
        lines += ["eq   " + fmt(row) + f" | {rhs:+.6g}" for row, rhs in zip(self.A_eq, self.b_eq)]
        lines.append("lb   " + fmt(self.lower))
        lines.append("ub   " + fmt(self.upper))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CvarSolution:
    weights: np.ndarray
    alpha: float
    objective: float
    iterations: int = 0


def build_lp(problem: CvarProblem) -> LinearProgram:
    k, m, gamma = problem.k, problem.m, problem.gamma
    n = k + 1 + m
    c = np.zeros(n)
    c[k] = 1.0
    c[k + 1 :] = 1.0 / (m * (1.0 - gamma))
    # -u @ r_s - alpha - z_s <= 0
    A_ub = np.zeros((m, n))
    A_ub[:, :k] = -problem.scenarios
    A_ub[:, k] = -1.0
    A_ub[:, k + 1 :] = -np.eye(m)
    b_ub = np.zeros(m)
    A_eq = np.zeros((1, n))
    A_eq[0, :k] = 1.0
    b_eq = np.ones(1)
    lower = np.zeros(n)
    lower[k] = -np.inf
    upper = np.full(n, np.inf)
    return LinearProgram(c, A_ub, b_ub, A_eq, b_eq, lower, upper, k, m, problem)


def _standard_form(lp: LinearProgram, rows: np.ndarray):
    """Standard form over a subset of scenario rows.

    Columns are ``[u, alpha+, alpha-, z_rows, slack_rows]``; the free threshold
    is split into two nonnegative parts.
    """
    k = lp.k
    r = rows.size
    n_std = k + 2 + 2 * r
    c = np.zeros(n_std)
    c[:k] = lp.c[:k]
    c[k] = lp.c[k]
    c[k + 1] = -lp.c[k]
    c[k + 2 : k + 2 + r] = lp.c[k + 1 + rows]
    A = np.zeros((r + 1, n_std))
    A[:r, :k] = lp.A_ub[rows, :k]
    A[:r, k] = lp.A_ub[rows, k]
    A[:r, k + 1] = -lp.A_ub[rows, k]
    A[:r, k + 2 : k + 2 + r] = lp.A_ub[rows][:, k + 1 + rows]
    A[:r, k + 2 + r :] = np.eye(r)
    A[r, :k] = lp.A_eq[0, :k]
    b = np.append(lp.b_ub[rows], lp.b_eq)
    return c, A, b


def _solve_rows(lp: LinearProgram, rows: np.ndarray, tol: float):
    c, A, b = _standard_form(lp, rows)
    k = lp.k
    try:
        res = simplex(c, A, b, tol=tol)
    except LPIterationLimit as exc:
        if exc.incumbent is not None:
            w = exc.incumbent[:k]
            exc.args = (f"{exc.args[0]}; incumbent weights {np.round(w, 6).tolist()}",)
        raise
    return res.x[:k], float(res.x[k] - res.x[k + 1]), res.objective, res.iterations


def solve_lp(lp: LinearProgram, tol: float = 1e-9, row_generation: bool = True,
             start_weights=None) -> CvarSolution:
    """Solve a CVaR program and certify the answer.

    With ``row_generation`` the simplex runs on a working set of scenario
    rows: start from the scenarios with the worst losses under
    ``start_weights`` (equal weights by default), solve,
    add every scenario whose loss exceeds the threshold, repeat. Omitted rows
    only drop constraints, so each restricted optimum is a lower bound and
    the loop stops at the full optimum once nothing is violated. Without it
    the whole tableau is solved in one go.

    The returned objective is the direct evaluation of the performance
    function at the solver's ``(weights, alpha)``; it must agree with the LP
    objective within ``tol`` scaled to the data.
    """
    scenarios = lp.problem.scenarios
    gamma = lp.problem.gamma
    m, k = lp.m, lp.k
    scale = max(1.0, float(np.abs(scenarios).max()))
    iterations = 0
    if row_generation:
        # a working set smaller than (1 - gamma) m leaves alpha unbounded below
        size = min(m, math.ceil((1.0 - gamma) * m) + 2 * k + 4)
        w0 = np.full(k, 1.0 / k) if start_weights is None else np.asarray(start_weights, float)
        rows = np.sort(np.argsort(scenarios @ w0, kind="stable")[:size])
        while True:
            u, alpha, lp_obj, its = _solve_rows(lp, rows, tol)
            iterations += its
            losses = -scenarios @ u
            violated = np.flatnonzero(losses - alpha > tol * scale)
            violated = np.setdiff1d(violated, rows, assume_unique=True)
            if violated.size == 0:
                break
            rows = np.union1d(rows, violated)
    else:
        u, alpha, lp_obj, iterations = _solve_rows(lp, np.arange(m), tol)

    if abs(u.sum() - 1.0) > 1e3 * tol or (u < -1e3 * tol).any():
        raise ArithmeticError(f"LP certificate failed: weights {u.tolist()} off the simplex")
    weights = np.clip(u, 0.0, None)
    weights /= weights.sum()
    objective = performance_function(weights, alpha, scenarios, gamma)
    if abs(objective - lp_obj) > 1e3 * tol * scale:
        raise ArithmeticError(
            f"LP certificate failed: objective {lp_obj:.12g} vs direct {objective:.12g}"
        )
    return CvarSolution(weights=weights, alpha=alpha, objective=objective, iterations=iterations)


def minimize_cvar(history, observed, gamma: float = DEFAULT_GAMMA, t: int = 1,
                  tol: float = 1e-9, start_weights=None) -> CvarSolution:
    """CVaR-minimising weights at trial ``t`` (1-based).

    ``history`` and ``observed`` are assets x trials return grids (arrays or
    objects with a ``returns`` attribute). Scenarios are all historical
    columns plus the first ``t - 1`` observed columns, equally weighted.
    """
    h = np.asarray(getattr(history, "returns", history), dtype=float)
    o = np.asarray(getattr(observed, "returns", observed), dtype=float)
    if t < 1:
        raise ValueError(f"trial index is 1-based, got {t}")
    if o.ndim == 2 and o.shape[1] < t - 1:
        raise ValueError(f"trial {t} needs {t - 1} observed columns, have {o.shape[1]}")
    parts = [h.T]
    if t > 1:
        parts.append(o[:, : t - 1].T)
    scenarios = np.vstack(parts)
    return solve_lp(build_lp(CvarProblem(scenarios, gamma)), tol=tol, start_weights=start_weights)
