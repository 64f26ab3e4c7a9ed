import csv
import json
import math

import numpy as np
import pytest

from banditfolio import experiment
from banditfolio.cli import main
from banditfolio.experiment import (
    THREADS_ENV,
    ConfigError,
    ExperimentConfig,
    emit_report,
    run_experiment,
    worker_count,
)
from banditfolio.gbm import GbmParams, constant_correlation, simulate_paths
from banditfolio.ingest import write_prices

SMALL = {"n": 12, "delta": 10, "scaler_lower": -0.01, "scaler_upper": 0.02, "dt": 0.1}


def small(**kw):
    return ExperimentConfig.from_dict({**SMALL, **kw})


def read_ledger(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def run_cli(tmp_path, cfg, *flags, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return main(["--config", str(p), "-q", *flags])


@pytest.fixture
def prices_csv(tmp_path):
    p = GbmParams(np.linspace(0.02, 0.08, 8), np.full(8, 0.03), constant_correlation(8, 0.2),
                  np.full(8, 50.0), 0.1, 40, tuple(f"T{i}" for i in range(8)))
    return write_prices(simulate_paths(p, np.random.default_rng(0)), tmp_path / "prices.csv")


def test_defaults_and_presets():
    cfg = ExperimentConfig.from_dict({})
    assert (cfg.k, cfg.n, cfg.delta, cfg.lam, cfg.gamma, cfg.epsilon) == (5, 200, 50, 0.9, 0.95, 0.1)
    low = ExperimentConfig.from_dict({}, preset="fig2-low")
    high = ExperimentConfig.from_dict({}, preset="fig2-high")
    assert low.drifts == high.drifts == (0.04, 0.035, 0.08, 0.02, 0.03)
    assert (low.vol_low, low.vol_high) == (0.02, 0.025)
    assert (high.vol_low, high.vol_high) == (0.03, 0.035)
    assert low.correlation == high.correlation == 0.3


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"mode": "csv"},
    {"data_path": "x.csv"},
    {"policies": []},
    {"policies": ["combined", "nope"]},
    {"seeds": []},
    {"lam": 2.0},
    {"universe_size": 8},
    {"drifts": [0.1, 0.2]},
    {"correlation": -0.5},
])
def test_invalid_configs(raw):
    with pytest.raises((ConfigError, ValueError)):
        ExperimentConfig.from_dict(raw)


def test_lambda_one_combined_equals_ucb():
    summary, [res] = run_experiment(small(lam=1.0, seeds=[3]), workers=1)
    j, u = res.policies.index("combined"), res.policies.index("ucb1")
    assert np.array_equal(res.rewards[:, j], res.rewards[:, u])
    pol = summary.stats["policies"]
    assert pol["combined"]["final_wealth"] == pol["ucb1"]["final_wealth"]


def test_repeated_seed_is_identical():
    _, (a, b) = run_experiment(small(seeds=[5, 5]), workers=1)
    assert np.array_equal(a.cumulative, b.cumulative)
    assert np.array_equal(a.weights, b.weights)


def test_seed_streams_are_distinct():
    _, (a, b) = run_experiment(small(seeds=[1, 2]), workers=1)
    assert not np.array_equal(a.rewards, b.rewards)


def test_worker_count_respects_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_count() == 3
    assert worker_count(8) == 3
    assert worker_count(2) == 2
    monkeypatch.setenv(THREADS_ENV, "0")
    assert worker_count() == 1


def test_outputs_byte_identical_across_pool_sizes(tmp_path, monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    cfg = {**SMALL, "seeds": [0, 1, 2, 3]}
    assert run_cli(tmp_path, cfg, "--out", str(tmp_path / "a"), "--workers", "1") == 0
    assert run_cli(tmp_path, cfg, "--out", str(tmp_path / "b"), "--workers", "3") == 0
    assert run_cli(tmp_path, cfg, "--out", str(tmp_path / "c"), "--workers", "1") == 0
    for name in ("ledger.csv", "summary.json"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()


def test_ledger_shape_and_summary_consistency(tmp_path):
    out = tmp_path / "out"
    assert run_cli(tmp_path, {**SMALL, "seeds": [4, 7, 9]}, "--out", str(out)) == 0
    rows = read_ledger(out / "ledger.csv")
    summary = json.loads((out / "summary.json").read_text())
    policies = list(summary["policies"])
    assert len(rows) == 3 * SMALL["n"] * len(policies) == 3 * 12 * 5
    assert list(rows[0]) == ["seed", "trial", "policy", "weights", "reward", "cum_reward", "wealth"]
    for p in policies:
        finals, variances = [], []
        for seed in (4, 7, 9):
            mine = [r for r in rows if r["policy"] == p and int(r["seed"]) == seed]
            rewards = np.array([float(r["reward"]) for r in mine])
            np.testing.assert_array_equal([float(r["cum_reward"]) for r in mine], np.cumsum(rewards))
            finals.append(float(mine[-1]["wealth"]))
            variances.append(float(np.var(rewards)))
            w = np.array([float(x) for x in mine[0]["weights"].split(";")])
            assert abs(w.sum() - 1) < 1e-9
        stats = summary["policies"][p]
        assert stats["final_wealth"]["median"] == float(np.median(finals))
        assert stats["final_wealth"]["mean"] == float(np.mean(finals))
        assert stats["reward_variance"]["median"] == float(np.median(variances))
        assert len(stats["pseudo_regret_mean"]) == SMALL["n"]
    assert summary["seeds"] == [4, 7, 9]
    assert set(summary["clamps"]) == {"ucb1", "egreedy"}


def test_wealth_column_is_exp_of_cumulative(tmp_path):
    out = tmp_path / "o"
    run_cli(tmp_path, {**SMALL, "seeds": [0], "policies": ["combined", "equal"]}, "--out", str(out))
    for r in read_ledger(out / "ledger.csv"):
        assert float(r["wealth"]) == math.exp(float(r["cum_reward"]))


def test_pseudo_regret_uses_true_means():
    _, [res] = run_experiment(small(seeds=[2], policies=["combined", "equal"]), workers=1)
    reg = res.pseudo_regret("equal")
    gap = res.true_means.max() - res.true_means.mean()
    np.testing.assert_allclose(reg, gap * np.arange(1, SMALL["n"] + 1), rtol=1e-12)


def test_csv_mode_with_filtering(tmp_path, prices_csv):
    out = tmp_path / "out"
    cfg = {"mode": "csv", "data_path": str(prices_csv), "k": 3, "delta": 15, "n": 20,
           "filter_enabled": True, "seeds": [0], "scaler_lower": -0.02, "scaler_upper": 0.03}
    assert run_cli(tmp_path, cfg, "--out", str(out)) == 0
    tree = json.loads((out / "tree.json").read_text())["0"]
    assert len(tree["vertices"]) == 8 and len(tree["edges"]) == 7
    summary = json.loads((out / "summary.json").read_text())
    chosen = summary["selected_assets"]["0"]
    assert len(chosen) == 3 and set(chosen) <= set(tree["vertices"])
    spectrum = read_ledger(out / "spectrum.csv")
    assert sum(r["stage"] == "pre" for r in spectrum) == 8
    assert sum(r["stage"] == "post" for r in spectrum) == 3


def test_csv_mode_needs_enough_columns(tmp_path, prices_csv):
    cfg = {"mode": "csv", "data_path": str(prices_csv), "k": 8, "delta": 30, "n": 30}
    assert run_cli(tmp_path, cfg, "--out", str(tmp_path / "o")) == 1
    manifest = json.loads((tmp_path / "o" / "failures.json").read_text())
    assert "need delta + n = 60" in manifest["failed"][0]["error"]


def test_filter_only(tmp_path):
    out = tmp_path / "f"
    cfg = {**SMALL, "universe_size": 8, "drifts": [0.03] * 8, "k": 3, "seeds": [0, 1]}
    assert run_cli(tmp_path, cfg, "--out", str(out), "--filter-only") == 0
    assert (out / "tree.json").exists() and (out / "spectrum.csv").exists()
    assert not (out / "ledger.csv").exists()
    assert set(json.loads((out / "tree.json").read_text())) == {"0", "1"}


def test_seeds_flag_overrides_config(tmp_path):
    out = tmp_path / "s"
    assert run_cli(tmp_path, {**SMALL, "seeds": [0]}, "--out", str(out), "--seeds", "8,9") == 0
    assert json.loads((out / "summary.json").read_text())["seeds"] == [8, 9]


def test_preset_flag(tmp_path):
    out = tmp_path / "p"
    assert run_cli(tmp_path, {"n": 5, "seeds": [0]}, "--preset", "fig2-high", "--out", str(out)) == 0
    cfg = json.loads((out / "summary.json").read_text())["config"]
    assert cfg["vol_low"] == 0.03 and cfg["n"] == 5


def test_dump_lp(tmp_path):
    out = tmp_path / "lp"
    assert run_cli(tmp_path, {**SMALL, "seeds": [6]}, "--out", str(out), "--dump-lp") == 0
    text = (out / "lp_seed6_trial1.txt").read_text()
    assert text.startswith("vars u1 u2 u3 u4 u5 alpha z1")
    assert text.count("\nle ") == SMALL["delta"]


def test_failed_seed_writes_manifest(tmp_path, monkeypatch):
    real = experiment.run_seed

    def flaky(cfg, seed, filter_only=False):
        if seed == 2:
            raise ArithmeticError("solver blew up")
        return real(cfg, seed, filter_only)

    monkeypatch.setattr(experiment, "run_seed", flaky)
    out = tmp_path / "x"
    assert run_cli(tmp_path, {**SMALL, "seeds": [1, 2, 3]}, "--out", str(out), "--workers", "1") == 1
    manifest = json.loads((out / "failures.json").read_text())
    assert manifest == {"failed": [{"seed": 2, "error": "ArithmeticError: solver blew up"}]}
    assert json.loads((out / "summary.json").read_text())["seeds"] == [1, 3]


def test_config_errors_exit_two(tmp_path):
    assert run_cli(tmp_path, {"policies": []}, "--out", str(tmp_path / "e")) == 2
    assert not (tmp_path / "e").exists()
    assert run_cli(tmp_path, {"unknown": 1}) == 2
    assert run_cli(tmp_path, {**SMALL, "mode": "csv", "data_path": str(tmp_path / "missing.csv")},
                   "--out", str(tmp_path / "m")) == 2
    assert main(["--config", str(tmp_path / "nope.json"), "-q"]) == 2
    assert main(["--seeds", "1,x", "-q"]) == 2


def test_empty_policy_report_refused(tmp_path):
    summary, results = run_experiment(small(seeds=[0]), workers=1)
    summary.stats["config"]["policies"] = []
    with pytest.raises(ConfigError):
        emit_report(summary, results, tmp_path / "r")
    assert not (tmp_path / "r").exists()
