"""Brute-force reference computations shared by the unit and acceptance tests."""

import itertools
from functools import lru_cache

import numpy as np

from banditfolio.gbm import GbmParams, simulate_log_increments


def simplex_grid(k, step=1e-3):
    """All points of the k-simplex whose coordinates are multiples of ``step``."""
    n = round(1 / step)
    if k == 1:
        return np.ones((1, 1))
    if k == 2:
        a = np.arange(n + 1)
        return np.column_stack([a, n - a]) / n
    if k == 3:
        a, b = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        mask = a + b <= n
        a, b = a[mask], b[mask]
        return np.column_stack([a, b, n - a - b]) / n
    raise ValueError("grid oracle supports k <= 3")


def ru_objective_min(losses, gamma):
    """Minimise ``a + mean(max(L - a, 0)) / (1 - gamma)`` over ``a`` by trying every sample point.

    ``losses`` has shape (..., m); the objective is convex and piecewise linear
    in ``a`` with kinks at the samples, so the candidates are exhaustive.
    """
    losses = np.asarray(losses, dtype=float)
    a = losses[..., :, None]
    excess = np.maximum(losses[..., None, :] - a, 0.0).mean(axis=-1)
    return (losses + excess / (1.0 - gamma)).min(axis=-1)


def grid_search_cvar(scenarios, gamma, step=1e-3, chunk=20_000):
    """Smallest sample CVaR over a grid of the simplex; returns (value, weights)."""
    scenarios = np.asarray(scenarios, dtype=float)
    grid = simplex_grid(scenarios.shape[1], step)
    best, arg = np.inf, None
    for lo in range(0, len(grid), chunk):
        u = grid[lo:lo + chunk]
        vals = ru_objective_min(-(u @ scenarios.T), gamma)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, arg = float(vals[i]), u[i]
    return best, arg


def alpha_grid_cvar(losses, gamma, step=1e-4):
    """Scalar objective minimised over a uniform grid of thresholds."""
    losses = np.asarray(losses, dtype=float)
    alphas = np.arange(losses.min() - step, losses.max() + step, step)
    excess = np.maximum(losses[None, :] - alphas[:, None], 0.0).mean(axis=1)
    return float((alphas + excess / (1.0 - gamma)).min())


@lru_cache(maxsize=None)
def all_trees(n):
    """Every labelled tree on n vertices, decoded from Pruefer sequences."""
    trees = []
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for v in seq:
            degree[v] += 1
        edges = []
        for v in seq:
            leaf = min(i for i in range(n) if degree[i] == 1)
            edges.append((leaf, v))
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = [i for i in range(n) if degree[i] == 1]
        edges.append((u, w))
        trees.append(edges)
    return np.array(trees)


def brute_force_mst_weight(d):
    """Minimum total weight over all spanning trees.

    Each tree's weights are summed in ascending order, the same order in which
    Kruskal's algorithm accepts edges, so equal edge sets give equal floats.
    """
    trees = all_trees(d.shape[0])
    w = np.sort(d[trees[..., 0], trees[..., 1]], axis=1)
    total = np.zeros(len(trees))
    for col in w.T:
        total += col
    return total.min()


def moment_check(params, n_steps, seed):
    """Largest z-scores of the sample mean and sample covariance of log-increments."""
    p = GbmParams(params.drifts, params.vols, params.corr, params.initial_prices,
                  params.dt, n_steps)
    x = simulate_log_increments(p, np.random.default_rng(seed))
    cov = p.theta * p.dt
    mean = (p.drifts - p.vols ** 2 / 2) * p.dt
    z_mean = (x.mean(axis=1) - mean) / np.sqrt(np.diag(cov) / n_steps)
    # var of a product of two centred gaussians: C_ii C_jj + C_ij^2
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov ** 2) / n_steps)
    z_cov = (np.cov(x) - cov) / se
    return np.abs(z_mean).max(), np.abs(z_cov).max()
