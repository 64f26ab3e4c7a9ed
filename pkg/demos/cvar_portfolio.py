"""Minimising conditional value-at-risk over long-only portfolios."""

import numpy as np

from banditfolio.cvar import CvarProblem, build_lp, empirical_cvar, empirical_var, solve_lp

spacer = "_" * 60
rng = np.random.default_rng(0)

# three assets: a calm one, a volatile one with a better mean, and one with rare crashes
m = 250
calm = rng.normal(0.0003, 0.004, m)
volatile = rng.normal(0.0010, 0.015, m)
crashy = rng.normal(0.0012, 0.006, m)
crashy[rng.choice(m, 6, replace=False)] -= 0.08
scenarios = np.column_stack([calm, volatile, crashy])

print("Per-asset risk at the 95% level (losses are negated returns):")
for name, r in zip(("calm", "volatile", "crashy"), scenarios.T):
    print(f"  {name:>8}: VaR {empirical_var(-r, 0.95):.4f}  CVaR {empirical_cvar(-r, 0.95):.4f}")

print(spacer)
lp = build_lp(CvarProblem(scenarios, 0.95))
print(f"The program has {lp.c.size} variables: 3 weights, a threshold and {m} excess terms.")
sol = solve_lp(lp)
print("CVaR-minimising weights:", np.round(sol.weights, 4))
print(f"threshold alpha = {sol.alpha:.4f}, minimised CVaR = {sol.objective:.4f}")
equal = np.full(3, 1 / 3)
print(f"equal weights would carry CVaR {empirical_cvar(-scenarios @ equal, 0.95):.4f}")

print(spacer)
print("How the weights shift with the confidence level:")
for gamma in (0.5, 0.8, 0.95, 0.99):
    w = solve_lp(build_lp(CvarProblem(scenarios, gamma))).weights
    print(f"  gamma={gamma:<5} weights {np.round(w, 3)}")
