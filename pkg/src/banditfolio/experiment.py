"""Experiment harness: data generation or ingestion, asset filtering, engine runs, reports.

Configs are flat JSON documents; every key has a default in ``DEFAULTS``.
Seeds fan out to a process pool and are reduced in seed order, so results do
not depend on the pool size.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine as eng
from .bandit import RewardScaler
from .cvar import CvarProblem, build_lp
from .gbm import GbmParams, constant_correlation, simulate_log_increments
from .ingest import ReturnMatrix, load_prices, split_history, to_log_returns
from .market_graph import covariance_eigenvalues, filter_assets

log = logging.getLogger(__name__)

THREADS_ENV = "BANDITFOLIO_THREADS"

FIG2_DRIFTS = [0.04, 0.035, 0.08, 0.02, 0.03]

DEFAULTS = {
    "mode": "simulate",
    "data_path": None,
    "k": 5,
    "n": 200,
    "delta": 50,
    "lam": 0.9,
    "gamma": 0.95,
    "epsilon": 0.1,
    "scaler_lower": -0.1,
    "scaler_upper": 0.1,
    "policies": list(eng.POLICIES),
    "filter_enabled": False,
    "universe_size": None,
    "drifts": FIG2_DRIFTS,
    "vols": None,
    "vol_low": 0.02,
    "vol_high": 0.025,
    "correlation": 0.3,
    "dt": 0.1,
    "initial_price": 100.0,
    "seeds": [0],
    "out": "results",
}

# Scaler bounds: mean drift per step +/- half the regime's mid per-step volatility.
PRESETS = {
    "fig2-low": {
        "mode": "simulate",
        "k": 5, "n": 200, "delta": 50, "lam": 0.9, "gamma": 0.95, "epsilon": 0.1,
        "drifts": FIG2_DRIFTS, "vol_low": 0.02, "vol_high": 0.025,
        "correlation": 0.3, "dt": 0.05,
        "scaler_lower": -0.000466, "scaler_upper": 0.004566,
        "universe_size": 5, "filter_enabled": False,
    },
    "fig2-high": {
        "mode": "simulate",
        "k": 5, "n": 200, "delta": 50, "lam": 0.9, "gamma": 0.95, "epsilon": 0.1,
        "drifts": FIG2_DRIFTS, "vol_low": 0.03, "vol_high": 0.035,
        "correlation": 0.3, "dt": 0.05,
        "scaler_lower": -0.001584, "scaler_upper": 0.005684,
        "universe_size": 5, "filter_enabled": False,
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    data_path: str | None
    k: int
    n: int
    delta: int
    lam: float
    gamma: float
    epsilon: float
    scaler_lower: float
    scaler_upper: float
    policies: tuple[str, ...]
    filter_enabled: bool
    universe_size: int | None
    drifts: tuple[float, ...]
    vols: tuple[float, ...] | None
    vol_low: float
    vol_high: float
    correlation: float
    dt: float
    initial_price: float
    seeds: tuple[int, ...]
    out: str

    @classmethod
    def from_dict(cls, raw: dict, preset: str | None = None) -> "ExperimentConfig":
        merged = dict(DEFAULTS)
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
            merged.update(PRESETS[preset])
        unknown = set(raw) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        merged.update(raw)
        for key in ("policies", "drifts", "vols", "seeds"):
            if merged[key] is not None:
                merged[key] = tuple(merged[key])
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path, preset: str | None = None) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(raw, preset)

    @property
    def universe(self) -> int:
        return self.k if self.universe_size is None else self.universe_size

    def validate(self) -> None:
        if self.mode not in ("simulate", "csv"):
            raise ConfigError(f"mode must be 'simulate' or 'csv', got {self.mode!r}")
        if self.mode == "csv" and not self.data_path:
            raise ConfigError("csv mode needs data_path")
        if self.mode == "csv" and not Path(self.data_path).is_file():
            raise ConfigError(f"data file {self.data_path} not found")
        if self.mode == "simulate" and self.data_path:
            raise ConfigError("data_path given in simulate mode; pick one data source")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if not self.policies:
            raise ConfigError("policy set is empty; nothing to report")
        unknown = set(self.policies) - set(eng.POLICIES)
        if unknown:
            raise ConfigError(f"unknown policies {sorted(unknown)}")
        if self.mode == "simulate":
            u = self.universe
            if u < self.k:
                raise ConfigError(f"universe_size {u} smaller than k {self.k}")
            if len(self.drifts) != u:
                raise ConfigError(f"{len(self.drifts)} drifts for a universe of {u} assets")
            if self.vols is not None and len(self.vols) != u:
                raise ConfigError(f"{len(self.vols)} vols for a universe of {u} assets")
            if not 0 < self.vol_low <= self.vol_high:
                raise ConfigError("need 0 < vol_low <= vol_high")
            if not self.dt > 0:
                raise ConfigError("dt must be positive")
            if u > 1 and not -1.0 / (u - 1) < self.correlation < 1.0:
                raise ConfigError(f"pairwise correlation {self.correlation} not positive definite for {u} assets")
            if self.needs_filter() and not self.filter_enabled:
                raise ConfigError(f"universe of {u} assets but k={self.k}; enable filtering")
        # remaining checks happen when the engine config is built
        self.engine_config(0)

    def needs_filter(self) -> bool:
        return self.universe > self.k

    def engine_config(self, seed: int) -> eng.EngineConfig:
        benchmarks = tuple(p for p in eng.BENCHMARKS if p in self.policies)
        return eng.EngineConfig(
            k=self.k, n=self.n, delta=self.delta, lam=self.lam, gamma=self.gamma,
            scaler=RewardScaler(self.scaler_lower, self.scaler_upper),
            epsilon=self.epsilon, benchmarks=benchmarks, seed=seed,
        )

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


@dataclass
class SeedResult:
    seed: int
    asset_ids: tuple[str, ...]
    policies: tuple[str, ...]
    weights: np.ndarray        # trials x policies x assets
    rewards: np.ndarray        # trials x policies
    cumulative: np.ndarray     # trials x policies
    clamps: dict[str, int]
    true_means: np.ndarray | None = None
    tree: dict | None = None
    spectrum_pre: np.ndarray | None = None
    spectrum_post: np.ndarray | None = None

    def wealth(self, policy: str) -> np.ndarray:
        j = self.policies.index(policy)
        return np.array([math.exp(c) for c in self.cumulative[:, j]])

    def pseudo_regret(self, policy: str) -> np.ndarray | None:
        """Cumulative ``sum_t (mu* - w_t @ mu)`` against the true per-trial means."""
        if self.true_means is None:
            return None
        j = self.policies.index(policy)
        gap = self.true_means.max() - self.weights[:, j, :] @ self.true_means
        return np.cumsum(gap)


@dataclass
class ExperimentSummary:
    stats: dict
    runtime: float = 0.0
    failures: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.stats, indent=2, sort_keys=True) + "\n"


def _seed_streams(seed: int):
    ss = np.random.SeedSequence(seed).spawn(3)
    engine_seed = int(ss[2].generate_state(1, dtype=np.uint32)[0])
    return np.random.default_rng(ss[0]), np.random.default_rng(ss[1]), engine_seed


def _simulate_universe(cfg: ExperimentConfig, vol_rng, path_rng):
    u = cfg.universe
    vols = np.asarray(cfg.vols, float) if cfg.vols is not None else vol_rng.uniform(cfg.vol_low, cfg.vol_high, u)
    params = GbmParams(
        drifts=np.asarray(cfg.drifts, float), vols=vols,
        corr=constant_correlation(u, cfg.correlation),
        initial_prices=np.full(u, cfg.initial_price), dt=cfg.dt, steps=cfg.delta + cfg.n,
    )
    inc = simulate_log_increments(params, path_rng)
    true_means = (params.drifts - 0.5 * params.vols ** 2) * params.dt
    return ReturnMatrix(params.asset_ids, inc), true_means


def _load_universe(cfg: ExperimentConfig):
    returns = to_log_returns(load_prices(cfg.data_path))
    need = cfg.delta + cfg.n
    if returns.n_trials < need:
        raise ConfigError(f"{cfg.data_path}: {returns.n_trials} return columns, need delta + n = {need}")
    return ReturnMatrix(returns.asset_ids, returns.returns[:, :need]), None


def prepare_seed(cfg: ExperimentConfig, seed: int):
    """Universe returns, true means, selected ids, and the tree for one seed."""
    vol_rng, path_rng, engine_seed = _seed_streams(seed)
    if cfg.mode == "simulate":
        universe, true_means = _simulate_universe(cfg, vol_rng, path_rng)
    else:
        universe, true_means = _load_universe(cfg)
    history, future = split_history(universe, cfg.delta)
    tree = None
    if cfg.filter_enabled:
        if universe.n_assets < cfg.k:
            raise ConfigError(f"universe has {universe.n_assets} assets, fewer than k={cfg.k}")
        ids, tree = filter_assets(history, cfg.k)
    else:
        if universe.n_assets != cfg.k:
            raise ConfigError(f"universe has {universe.n_assets} assets but k={cfg.k} and filtering is off")
        ids = list(universe.asset_ids)
    if true_means is not None:
        index = [universe.asset_ids.index(a) for a in ids]
        true_means = true_means[index]
    return universe, history, future, ids, tree, true_means, engine_seed


def run_seed(cfg: ExperimentConfig, seed: int, filter_only: bool = False) -> SeedResult:
    universe, history, future, ids, tree, true_means, engine_seed = prepare_seed(cfg, seed)
    spec_pre = spec_post = None
    if cfg.filter_enabled:
        spec_pre = covariance_eigenvalues(history)
        spec_post = covariance_eigenvalues(history.select(ids))
    h = history.select(ids)
    f = future.select(ids)
    if filter_only:
        return SeedResult(seed, tuple(ids), (), np.empty((0, 0, cfg.k)), np.empty((0, 0)),
                          np.empty((0, 0)), {}, true_means, tree.to_dict() if tree else None,
                          spec_pre, spec_post)
    ecfg = cfg.engine_config(engine_seed)
    records, state = eng.run_with_state(ecfg, h, f)
    policies = tuple(p for p in ecfg.policies if p in cfg.policies)
    weights = np.array([[r.weights[p] for p in policies] for r in records])
    rewards = np.array([[r.rewards[p] for p in policies] for r in records])
    cumulative = np.array([[r.cumulative[p] for p in policies] for r in records])
    clamps = {}
    if eng.UCB1 in ecfg.policies or eng.COMBINED in ecfg.policies:
        clamps["ucb1"] = state.ucb_scaler.clamps
    if eng.EGREEDY in ecfg.policies:
        clamps["egreedy"] = state.greedy_scaler.clamps
    return SeedResult(seed, tuple(ids), policies, weights, rewards, cumulative, clamps,
                      true_means, tree.to_dict() if tree else None, spec_pre, spec_post)


def _run_seed_safe(args):
    cfg, seed, filter_only = args
    try:
        return run_seed(cfg, seed, filter_only)
    except Exception as exc:  # reported in the failure manifest
        return {"seed": seed, "error": f"{type(exc).__name__}: {exc}"}


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get(THREADS_ENV)
    cap = int(env) if env else (os.cpu_count() or 1)
    n = cap if requested is None else min(requested, cap)
    return max(1, n)


def _quantile_stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    q25, med, q75 = np.quantile(v, [0.25, 0.5, 0.75])
    return {"median": float(med), "mean": float(v.mean()), "q25": float(q25),
            "q75": float(q75), "iqr": float(q75 - q25), "count": int(v.size)}


def summarize(cfg: ExperimentConfig, results: list[SeedResult]) -> dict:
    """Aggregate completed seeds; uses only values that also appear in ``ledger.csv``."""
    # the output location is not an experiment parameter; leave it out so reruns elsewhere match
    config = {k: v for k, v in cfg.to_dict().items() if k != "out"}
    stats: dict = {"config": config, "seeds": [r.seed for r in results], "policies": {}}
    if not results or not results[0].policies:
        return stats
    policies = results[0].policies
    for p in policies:
        final = [float(r.wealth(p)[-1]) for r in results]
        reward_var = [float(np.var(r.rewards[:, r.policies.index(p)])) for r in results]
        entry = {"final_wealth": _quantile_stats(final),
                 "reward_variance": _quantile_stats(reward_var)}
        regrets = [r.pseudo_regret(p) for r in results]
        if all(x is not None for x in regrets):
            entry["pseudo_regret_mean"] = [float(x) for x in np.mean(regrets, axis=0)]
        stats["policies"][p] = entry
    clamp_keys = sorted({k for r in results for k in r.clamps})
    stats["clamps"] = {k: {str(r.seed): r.clamps.get(k, 0) for r in results} for k in clamp_keys}
    stats["selected_assets"] = {str(r.seed): list(r.asset_ids) for r in results}
    return stats


def run_experiment(cfg: ExperimentConfig, workers: int | None = None,
                   filter_only: bool = False) -> tuple[ExperimentSummary, list[SeedResult]]:
    start = time.perf_counter()
    n_workers = min(worker_count(workers), len(cfg.seeds))
    jobs = [(cfg, s, filter_only) for s in cfg.seeds]
    if n_workers == 1:
        outcomes = [_run_seed_safe(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(_run_seed_safe, jobs))
    results, failures = [], []
    for seed, out in zip(cfg.seeds, outcomes):
        if isinstance(out, dict):
            failures.append(out)
            log.error("seed %d failed: %s", seed, out["error"])
        else:
            results.append(out)
            if out.policies:
                j = out.policies.index(eng.COMBINED) if eng.COMBINED in out.policies else 0
                log.info("seed %d done: %s final wealth %.4f", seed, out.policies[j],
                         math.exp(out.cumulative[-1, j]))
            else:
                log.info("seed %d done: filtered to %s", seed, ",".join(out.asset_ids))
    summary = ExperimentSummary(summarize(cfg, results), time.perf_counter() - start, failures)
    return summary, results


def _fmt(x: float) -> str:
    return repr(float(x))


def ledger_csv(results: list[SeedResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "trial", "policy", "weights", "reward", "cum_reward", "wealth"])
    for r in results:
        for t in range(r.rewards.shape[0]):
            for j, p in enumerate(r.policies):
                cum = r.cumulative[t, j]
                w.writerow([r.seed, t + 1, p, ";".join(_fmt(x) for x in r.weights[t, j]),
                            _fmt(r.rewards[t, j]), _fmt(cum), _fmt(math.exp(cum))])
    return buf.getvalue()


def spectrum_csv(results: list[SeedResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "stage", "rank", "eigenvalue"])
    for r in results:
        for stage, ev in (("pre", r.spectrum_pre), ("post", r.spectrum_post)):
            if ev is None:
                continue
            for i, v in enumerate(ev, start=1):
                w.writerow([r.seed, stage, i, _fmt(v)])
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_report(summary: ExperimentSummary, results: list[SeedResult], out_dir) -> list[Path]:
    """Write ledger, summary, tree and spectrum files; returns the paths written."""
    if not summary.stats.get("config", {}).get("policies"):
        raise ConfigError("policy set is empty; nothing to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    written = []
    if any(r.policies for r in results):
        _write(out / "ledger.csv", ledger_csv(results))
        written.append(out / "ledger.csv")
    _write(out / "summary.json", summary.to_json())
    written.append(out / "summary.json")
    trees = {str(r.seed): r.tree for r in results if r.tree is not None}
    if trees:
        _write(out / "tree.json", json.dumps(trees, indent=2, sort_keys=True) + "\n")
        written.append(out / "tree.json")
        _write(out / "spectrum.csv", spectrum_csv(results))
        written.append(out / "spectrum.csv")
    if summary.failures:
        _write(out / "failures.json", json.dumps({"failed": summary.failures}, indent=2) + "\n")
        written.append(out / "failures.json")
    return written


def dump_lp(cfg: ExperimentConfig, out_dir) -> Path:
    """Plain-text dump of the first seed's trial-1 CVaR program."""
    _, history, _, ids, _, _, _ = prepare_seed(cfg, cfg.seeds[0])
    lp = build_lp(CvarProblem(history.select(ids).returns.T, cfg.gamma))
    path = Path(out_dir) / f"lp_seed{cfg.seeds[0]}_trial1.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    _write(path, lp.to_text())
    return path
