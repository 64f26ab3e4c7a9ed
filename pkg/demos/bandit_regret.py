"""UCB1 on two Bernoulli arms: how regret grows next to its finite-time bound."""

import numpy as np

from banditfolio.bandit import simulate_bernoulli_ucb1, ucb1_regret_bound

spacer = "_" * 60
mu = [0.7, 0.5]

print("Two arms pay 1 with probability 0.7 and 0.5.")
print("UCB1 plays each arm once, then the arm with the largest")
print("mean + sqrt(2 ln t / plays).")
print(spacer)

checkpoints = [10, 100, 1000, 10_000]
regret = simulate_bernoulli_ucb1(mu, 10_000, range(200), checkpoints)
print(f"{'n':>7} {'mean pseudo-regret':>20} {'bound':>10}")
for n, r in zip(checkpoints, regret.mean(axis=0)):
    print(f"{n:>7} {r:>20.2f} {ucb1_regret_bound(mu, n):>10.2f}")

print(spacer)
print("Regret per trial shrinks as the bandit settles on the better arm:")
for n, r in zip(checkpoints, regret.mean(axis=0)):
    print(f"  n={n:>6}: {r / n:.4f} per trial")
print("The bound is loose by a wide margin; it is a worst case over all")
print("reward distributions with these means.")
