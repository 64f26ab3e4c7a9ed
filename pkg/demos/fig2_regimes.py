"""Five policies on simulated low- and high-volatility markets.

Runs the two shipped presets over a handful of seeds and prints median final
wealth and per-trial reward variance. Pass a seed count as the first argument
for a larger run (the acceptance suite uses 500).
"""

import sys

from banditfolio.experiment import ExperimentConfig, run_experiment

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 20
spacer = "_" * 60

for preset in ("fig2-low", "fig2-high"):
    cfg = ExperimentConfig.from_dict({"seeds": list(range(n_seeds))}, preset=preset)
    summary, _ = run_experiment(cfg)
    print(f"{preset}: vols uniform on [{cfg.vol_low}, {cfg.vol_high}], dt={cfg.dt}, "
          f"pairwise correlation {cfg.correlation}, {n_seeds} seeds")
    print(f"{'policy':>10} {'median wealth':>14} {'reward variance':>16}")
    for p, s in summary.stats["policies"].items():
        print(f"{p:>10} {s['final_wealth']['median']:>14.4f} {s['reward_variance']['median']:>16.3e}")
    print(spacer)
