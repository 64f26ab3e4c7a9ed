"""Correlated geometric Brownian motion paths.

Each step applies the exact log-normal update

    P_i <- P_i * exp((a_i - s_i^2 / 2) dt + sqrt(dt) * (A @ Z)_i)

where ``A`` is the Cholesky factor of the instantaneous covariance
``s_i s_j rho_ij`` and ``Z`` is one standard normal vector per step shared by
all assets. Normals come from numpy's PCG64 ``Generator.standard_normal``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import PriceSeries


class NotPositiveDefinite(np.linalg.LinAlgError):
    def __init__(self, minor: int, pivot: float):
        super().__init__(f"matrix is not positive definite: leading minor of order {minor} "
                         f"has pivot {pivot:.3e}")
        self.minor = minor
        self.pivot = pivot


def assemble_theta(vols, corr) -> np.ndarray:
    vols = np.asarray(vols, dtype=float)
    corr = np.asarray(corr, dtype=float)
    if corr.shape != (vols.size, vols.size):
        raise ValueError(f"{vols.size} volatilities but correlation shape {corr.shape}")
    return np.outer(vols, vols) * corr


def cholesky(theta, pivot_tol: float = 1e-12) -> np.ndarray:
    """Lower-triangular ``A`` with ``A @ A.T == theta``.

    Raises ``NotPositiveDefinite`` naming the first leading minor whose pivot
    is at or below ``pivot_tol`` (relative to the largest diagonal entry).
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[0]
    if theta.shape != (n, n):
        raise ValueError(f"matrix must be square, got {theta.shape}")
    if not np.allclose(theta, theta.T, rtol=0, atol=1e-12 * max(1.0, np.abs(theta).max())):
        raise ValueError("matrix is not symmetric")
    floor = pivot_tol * float(np.abs(np.diag(theta)).max()) if n else 0.0
    a = np.zeros_like(theta)
    for j in range(n):
        pivot = theta[j, j] - a[j, :j] @ a[j, :j]
        if not pivot > floor:
            raise NotPositiveDefinite(j + 1, float(pivot))
        a[j, j] = np.sqrt(pivot)
        a[j + 1 :, j] = (theta[j + 1 :, j] - a[j + 1 :, :j] @ a[j, :j]) / a[j, j]
    return a


@dataclass(frozen=True)
class GbmParams:
    drifts: np.ndarray
    vols: np.ndarray
    corr: np.ndarray
    initial_prices: np.ndarray
    dt: float
    steps: int
    asset_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        for name in ("drifts", "vols", "corr", "initial_prices"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        k = self.drifts.size
        if self.vols.shape != (k,) or self.initial_prices.shape != (k,):
            raise ValueError("drifts, vols and initial_prices must have the same length")
        if self.corr.shape != (k, k):
            raise ValueError(f"correlation matrix must be {k}x{k}, got {self.corr.shape}")
        if (self.vols <= 0).any():
            raise ValueError("volatilities must be strictly positive")
        if (self.initial_prices <= 0).any():
            raise ValueError("initial prices must be strictly positive")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.steps < 1:
            raise ValueError(f"steps must be positive, got {self.steps}")
        if not np.allclose(self.corr, self.corr.T) or not np.allclose(np.diag(self.corr), 1.0):
            raise ValueError("correlation matrix must be symmetric with unit diagonal")
        if self.asset_ids is None:
            object.__setattr__(self, "asset_ids", tuple(f"S{i + 1}" for i in range(k)))

    @property
    def k(self) -> int:
        return self.drifts.size

    @property
    def theta(self) -> np.ndarray:
        return assemble_theta(self.vols, self.corr)


def simulate_log_increments(params: GbmParams, rng: np.random.Generator) -> np.ndarray:
    """Per-step log price increments, assets x steps."""
    a = cholesky(params.theta)
    z = rng.standard_normal((params.steps, params.k))
    drift = (params.drifts - 0.5 * params.vols ** 2) * params.dt
    return (drift + np.sqrt(params.dt) * z @ a.T).T


def simulate_paths(params: GbmParams, rng: np.random.Generator) -> PriceSeries:
    """Price paths of ``steps + 1`` observations starting at ``initial_prices``."""
    inc = simulate_log_increments(params, rng)
    log_p = np.log(params.initial_prices)[:, None] + np.cumsum(inc, axis=1)
    prices = np.hstack([params.initial_prices[:, None], np.exp(log_p)])
    return PriceSeries(params.asset_ids, prices)


def constant_correlation(k: int, rho: float) -> np.ndarray:
    c = np.full((k, k), float(rho))
    np.fill_diagonal(c, 1.0)
    return c


def block_correlation(n: int, block, rho_block: float, rho_other: float = 0.0) -> np.ndarray:
    """Correlation ``rho_block`` inside ``block``, ``rho_other`` for every other pair."""
    c = np.full((n, n), float(rho_other))
    idx = np.asarray(list(block))
    c[np.ix_(idx, idx)] = rho_block
    np.fill_diagonal(c, 1.0)
    return c
