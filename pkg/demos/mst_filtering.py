"""Picking weakly connected assets from a correlation network."""

import numpy as np

from banditfolio.gbm import GbmParams, block_correlation, simulate_log_increments
from banditfolio.ingest import ReturnMatrix
from banditfolio.market_graph import covariance_eigenvalues, filter_assets, top_eigenvalue_share

spacer = "_" * 60
rng = np.random.default_rng(3)

# 20 assets; the first 10 move together like a single sector
corr = block_correlation(20, range(10), 0.7, 0.1)
params = GbmParams(np.full(20, 0.04), rng.uniform(0.02, 0.035, 20), corr, np.ones(20), 0.05, 250)
history = ReturnMatrix(params.asset_ids, simulate_log_increments(params, rng))

ids, tree = filter_assets(history, 6)
print("Minimum spanning tree over distances sqrt(2 (1 - rho)):")
for i, j, w in tree.edges:
    print(f"  {tree.vertex_ids[i]:>4} -- {tree.vertex_ids[j]:<4} {w:.3f}")
print(spacer)
deg = dict(zip(tree.vertex_ids, tree.degrees))
print("Selected peripheral assets:", ", ".join(f"{a} (degree {deg[a]})" for a in ids))
print("Sector assets are S1..S10; selections outside it:",
      sum(int(a[1:]) > 10 for a in ids), "of", len(ids))
print(spacer)
pre = covariance_eigenvalues(history)
post = covariance_eigenvalues(history.select(ids))
print(f"top eigenvalue share before filtering {top_eigenvalue_share(pre):.3f}, "
      f"after {top_eigenvalue_share(post):.3f}")
