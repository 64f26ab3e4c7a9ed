"""Single-asset bandit policies (UCB1, epsilon-greedy) and regret bookkeeping.

Assets are indexed from 0; trials are counted from 1. Rewards fed to the
policies are log returns mapped into [0, 1] by a ``RewardScaler``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class RewardScaler:
    """Affine map of ``[lower, upper]`` onto ``[0, 1]`` with clamping.

    ``clamps`` counts how many inputs fell outside the range.
    """

    lower: float = -0.1
    upper: float = 0.1
    clamps: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"scaler needs lower < upper, got [{self.lower}, {self.upper}]")

    def fresh(self) -> "RewardScaler":
        return RewardScaler(self.lower, self.upper)


def scale_reward(scaler: RewardScaler, r: float) -> float:
    if r < scaler.lower or r > scaler.upper:
        scaler.clamps += 1
    r = min(max(r, scaler.lower), scaler.upper)
    return (r - scaler.lower) / (scaler.upper - scaler.lower)


@dataclass(frozen=True)
class UcbState:
    """Play counts and running mean rewards before trial ``trial``."""

    plays: tuple[int, ...]
    mean_rewards: tuple[float, ...]
    trial: int = 1

    @classmethod
    def initial(cls, k: int) -> "UcbState":
        if k < 1:
            raise ValueError(f"need at least one asset, got {k}")
        return cls((0,) * k, (0.0,) * k, 1)

    @property
    def k(self) -> int:
        return len(self.plays)


def ucb_index(mean_rewards, plays, t):
    """Upper confidence index ``mean + sqrt(2 ln t / plays)``; broadcasts over leading axes."""
    plays = np.asarray(plays, dtype=float)
    t = np.asarray(t, dtype=float)
    if t.ndim:
        t = t[..., None]
    return np.asarray(mean_rewards, dtype=float) + np.sqrt(2.0 * np.log(t) / plays)


def ucb1_select(state: UcbState, k: int | None = None) -> int:
    """Round-robin for the first ``k`` trials, then the highest confidence index.

    ``np.argmax`` returns the first maximiser, so ties go to the lowest index.
    """
    k = state.k if k is None else k
    if k != state.k:
        raise ValueError(f"state tracks {state.k} assets, asked for {k}")
    t = state.trial
    if t <= k:
        return t - 1
    if min(state.plays) == 0:
        unplayed = [i for i, n in enumerate(state.plays) if n == 0]
        raise ValueError(f"assets {unplayed} never played before trial {t}")
    return int(np.argmax(ucb_index(state.mean_rewards, state.plays, t)))


def greedy_select(state: UcbState) -> int:
    return int(np.argmax(state.mean_rewards))


def epsilon_greedy_select(state: UcbState, epsilon: float, rng: np.random.Generator) -> int:
    """Uniformly random asset with probability ``epsilon``, else the best mean.

    Exactly one uniform draw is consumed per call, plus one integer draw when
    exploring, so a seeded generator replays identically.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return int(rng.integers(state.k))
    return greedy_select(state)


def update_state(state: UcbState, asset: int, scaled_reward: float) -> UcbState:
    if not 0 <= asset < state.k:
        raise IndexError(f"asset {asset} out of range for {state.k} assets")
    if not 0.0 <= scaled_reward <= 1.0:
        raise ValueError(f"scaled reward {scaled_reward} outside [0, 1]")
    plays = list(state.plays)
    means = list(state.mean_rewards)
    plays[asset] += 1
    means[asset] += (scaled_reward - means[asset]) / plays[asset]
    return replace(state, plays=tuple(plays), mean_rewards=tuple(means), trial=state.trial + 1)


@dataclass
class RegretLedger:
    """Realised per-trial rewards of a policy, plus true means when known."""

    true_means: np.ndarray | None = None
    rewards: list[float] = field(default_factory=list)
    choices: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.true_means is not None:
            self.true_means = np.asarray(self.true_means, dtype=float)

    def record(self, asset: int, reward: float) -> None:
        self.choices.append(int(asset))
        self.rewards.append(float(reward))

    def plays(self, n: int | None = None) -> np.ndarray:
        if self.true_means is None:
            raise ValueError("true means unknown")
        n = len(self.choices) if n is None else n
        return np.bincount(np.asarray(self.choices[:n], dtype=int), minlength=self.true_means.size)

    def regret(self, n: int | None = None) -> float:
        """Realised regret ``n mu* - sum of rewards``."""
        if self.true_means is None:
            raise ValueError("true means unknown")
        n = len(self.rewards) if n is None else n
        return float(n * self.true_means.max() - sum(self.rewards[:n]))


def pseudo_regret(ledger_or_means, plays=None, n: int | None = None) -> float:
    """Gap-weighted play counts ``sum_i (mu* - mu_i) T_i(n)``.

    Accepts a ``RegretLedger`` (optionally truncated at ``n`` trials) or true
    means together with play counts.
    """
    if isinstance(ledger_or_means, RegretLedger):
        if ledger_or_means.true_means is None:
            raise ValueError("pseudo-regret needs the true means")
        mu = ledger_or_means.true_means
        plays = ledger_or_means.plays(n)
    else:
        if ledger_or_means is None:
            raise ValueError("pseudo-regret needs the true means")
        mu = np.asarray(ledger_or_means, dtype=float)
        plays = np.asarray(plays, dtype=float)
    gaps = mu.max() - mu
    return float(gaps @ plays)


def ucb1_regret_bound(mu, n: float) -> float:
    """Finite-time UCB1 upper bound on expected pseudo-regret after ``n`` trials."""
    mu = np.asarray(mu, dtype=float)
    gaps = mu.max() - mu
    strict = gaps[gaps > 0]
    return float(8.0 * np.sum(math.log(n) / strict) + (1.0 + math.pi ** 2 / 3.0) * gaps.sum())


def simulate_bernoulli_ucb1(means, n: int, seeds, checkpoints=None) -> np.ndarray:
    """Pseudo-regret of UCB1 on Bernoulli arms, one row per seed.

    Seeds are run side by side; each seed owns its own generator, so a row
    depends only on its seed. Returns pseudo-regret at each checkpoint
    (default: every trial) with shape ``(len(seeds), len(checkpoints))``.
    """
    mu = np.asarray(means, dtype=float)
    k = mu.size
    checkpoints = np.arange(1, n + 1) if checkpoints is None else np.asarray(checkpoints)
    gens = [np.random.default_rng(s) for s in seeds]
    # draw all uniforms up front; one per trial per seed
    u = np.stack([g.random(n) for g in gens])
    b = len(gens)
    plays = np.zeros((b, k))
    sums = np.zeros((b, k))
    gaps = mu.max() - mu
    out = np.empty((b, checkpoints.size))
    ci = 0
    rows = np.arange(b)
    for t in range(1, n + 1):
        if t <= k:
            arm = np.full(b, t - 1)
        else:
            arm = np.argmax(ucb_index(sums / plays, plays, np.full(b, t)), axis=1)
        reward = (u[:, t - 1] < mu[arm]).astype(float)
        plays[rows, arm] += 1
        sums[rows, arm] += reward
        while ci < checkpoints.size and checkpoints[ci] == t:
            out[:, ci] = plays @ gaps
            ci += 1
    return out
