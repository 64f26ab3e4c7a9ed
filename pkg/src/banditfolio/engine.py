"""Sequential portfolio selection: UCB1 one-hot blended with CVaR-minimising weights.

At trial ``t`` the engine picks the UCB1 asset, solves the CVaR program over
the history plus the returns observed so far, mixes the two with ``lam`` and
books ``weights @ r_t``. Benchmark policies run in lockstep on the same
returns: UCB1 alone, CVaR alone, epsilon-greedy and equal weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bandit import (
    RewardScaler,
    UcbState,
    epsilon_greedy_select,
    scale_reward,
    ucb1_select,
    update_state,
)
from .cvar import DEFAULT_GAMMA, minimize_cvar

COMBINED = "combined"
UCB1 = "ucb1"
CVAR = "cvar"
EGREEDY = "egreedy"
EQUAL = "equal"
BENCHMARKS = (UCB1, CVAR, EGREEDY, EQUAL)
POLICIES = (COMBINED,) + BENCHMARKS

SIMPLEX_TOL = 1e-9


def check_simplex(w, what: str = "weights") -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if (w < -SIMPLEX_TOL).any() or abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"{what} {w.tolist()} not on the simplex")
    return w


def one_hot(k: int, i: int) -> np.ndarray:
    e = np.zeros(k)
    e[i] = 1.0
    return e


def combine(bandit_weights, risk_weights, lam: float) -> np.ndarray:
    """Convex mix ``lam * bandit_weights + (1 - lam) * risk_weights``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    m = check_simplex(bandit_weights, "bandit weights")
    c = check_simplex(risk_weights, "risk weights")
    if lam == 1.0:
        return m.copy()
    if lam == 0.0:
        return c.copy()
    return lam * m + (1.0 - lam) * c


@dataclass(frozen=True)
class EngineConfig:
    k: int
    n: int
    delta: int
    lam: float = 0.9
    gamma: float = DEFAULT_GAMMA
    scaler: RewardScaler = field(default_factory=RewardScaler)
    epsilon: float = 0.1
    benchmarks: tuple[str, ...] = BENCHMARKS
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.k < 1 or self.n < 1 or self.delta < 1:
            raise ValueError(f"k, n and delta must be positive, got {self.k}, {self.n}, {self.delta}")
        unknown = set(self.benchmarks) - set(BENCHMARKS)
        if unknown:
            raise ValueError(f"unknown benchmark policies {sorted(unknown)}")

    @property
    def policies(self) -> tuple[str, ...]:
        return (COMBINED,) + tuple(p for p in BENCHMARKS if p in self.benchmarks)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    weights: dict[str, np.ndarray]
    rewards: dict[str, float]
    cumulative: dict[str, float]
    ucb_asset: int


@dataclass
class EngineState:
    config: EngineConfig
    history: np.ndarray
    ucb: UcbState
    greedy: UcbState
    rng: np.random.Generator
    ucb_scaler: RewardScaler
    greedy_scaler: RewardScaler
    observed: list[np.ndarray] = field(default_factory=list)
    cumulative: dict[str, float] = field(default_factory=dict)
    last_risk_weights: np.ndarray | None = None

    @property
    def trial(self) -> int:
        return len(self.observed) + 1


def initial_state(config: EngineConfig, history) -> EngineState:
    h = np.asarray(getattr(history, "returns", history), dtype=float)
    if h.shape != (config.k, config.delta):
        raise ValueError(f"history must be {config.k}x{config.delta}, got {h.shape}")
    return EngineState(
        config=config,
        history=h,
        ucb=UcbState.initial(config.k),
        greedy=UcbState.initial(config.k),
        rng=np.random.default_rng(config.seed),
        ucb_scaler=config.scaler.fresh(),
        greedy_scaler=config.scaler.fresh(),
        cumulative={p: 0.0 for p in config.policies},
    )


def _risk_weights(state: EngineState) -> np.ndarray:
    cfg = state.config
    observed = np.array(state.observed).T if state.observed else np.empty((cfg.k, 0))
    sol = minimize_cvar(state.history, observed, cfg.gamma, state.trial,
                        start_weights=state.last_risk_weights)
    return sol.weights


def step(state: EngineState, r_t) -> tuple[TrialRecord, EngineState]:
    """Choose all portfolios for the current trial, then book ``r_t`` against them.

    ``state`` is advanced in place and also returned.
    """
    cfg = state.config
    r_t = np.asarray(r_t, dtype=float)
    if r_t.shape != (cfg.k,):
        raise ValueError(f"return vector must have length {cfg.k}, got shape {r_t.shape}")
    t = state.trial
    if t > cfg.n:
        raise ValueError(f"engine configured for {cfg.n} trials")
    k = cfg.k

    arm = ucb1_select(state.ucb)
    bandit_w = one_hot(k, arm)
    need_risk = cfg.lam < 1.0 or CVAR in cfg.benchmarks
    risk_w = _risk_weights(state) if need_risk else bandit_w
    state.last_risk_weights = risk_w

    weights = {COMBINED: combine(bandit_w, risk_w, cfg.lam)}
    if UCB1 in cfg.benchmarks:
        weights[UCB1] = bandit_w
    if CVAR in cfg.benchmarks:
        weights[CVAR] = risk_w
    if EGREEDY in cfg.benchmarks:
        g = t - 1 if t <= k else epsilon_greedy_select(state.greedy, cfg.epsilon, state.rng)
        weights[EGREEDY] = one_hot(k, g)
        state.greedy = update_state(state.greedy, g, scale_reward(state.greedy_scaler, r_t[g]))
    if EQUAL in cfg.benchmarks:
        weights[EQUAL] = np.full(k, 1.0 / k)

    rewards = {}
    for p, w in weights.items():
        check_simplex(w, f"{p} weights at trial {t}")
        rewards[p] = float(w @ r_t)
        state.cumulative[p] += rewards[p]

    state.ucb = update_state(state.ucb, arm, scale_reward(state.ucb_scaler, r_t[arm]))
    state.observed.append(r_t)
    record = TrialRecord(t, weights, rewards, dict(state.cumulative), arm)
    return record, state


def run_with_state(config: EngineConfig, history, future) -> tuple[list[TrialRecord], EngineState]:
    f = np.asarray(getattr(future, "returns", future), dtype=float)
    if f.shape != (config.k, config.n):
        raise ValueError(f"future returns must be {config.k}x{config.n}, got {f.shape}")
    state = initial_state(config, history)
    records = []
    for t in range(config.n):
        rec, state = step(state, f[:, t])
        records.append(rec)
    return records, state


def run(config: EngineConfig, history, future) -> list[TrialRecord]:
    """Run all ``config.n`` trials over ``future`` (assets x trials)."""
    return run_with_state(config, history, future)[0]


def rewards_of(records: Sequence[TrialRecord], policy: str) -> np.ndarray:
    if not records:
        raise ValueError("no trial records")
    if policy not in records[0].rewards:
        raise KeyError(f"unknown policy {policy!r}; have {sorted(records[0].rewards)}")
    return np.array([r.rewards[policy] for r in records])


def wealth_curve(records: Sequence[TrialRecord], policy: str) -> np.ndarray:
    """Wealth from an initial 1: ``exp`` of cumulative log rewards, length ``n + 1``."""
    rewards_of(records, policy)
    cum = np.array([r.cumulative[policy] for r in records])
    return np.concatenate([[1.0], np.exp(cum)])
