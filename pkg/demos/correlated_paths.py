"""Correlated geometric Brownian motion and what its increments look like."""

import numpy as np

from banditfolio.gbm import GbmParams, assemble_theta, cholesky, constant_correlation, simulate_paths
from banditfolio.ingest import to_log_returns

spacer = "_" * 60
vols = np.array([0.02, 0.025, 0.03])
corr = constant_correlation(3, 0.3)
theta = assemble_theta(vols, corr)
a = cholesky(theta)
print("Instantaneous covariance:")
print(theta)
print("Its Cholesky factor A (A @ A.T reproduces it):")
print(np.round(a, 6))

print(spacer)
params = GbmParams([0.04, 0.06, 0.08], vols, corr, [100.0, 100.0, 100.0], dt=0.05, steps=20_000)
paths = simulate_paths(params, np.random.default_rng(1))
inc = to_log_returns(paths).returns
print("Sample mean of log increments vs (alpha - sigma^2/2) dt:")
print(" ", np.round(inc.mean(axis=1), 6))
print(" ", np.round((params.drifts - vols ** 2 / 2) * params.dt, 6))
print("Sample correlation of increments:")
print(np.round(np.corrcoef(inc), 3))
print(spacer)
short = simulate_paths(GbmParams(params.drifts, vols, corr, params.initial_prices, 0.05, 200),
                       np.random.default_rng(2))
print("A 200-step path ends at", np.round(short.prices[:, -1], 2))
