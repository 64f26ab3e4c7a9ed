"""Command-line entry point: ``banditfolio --config cfg.json --out results/``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiment import (
    ConfigError,
    ExperimentConfig,
    PRESETS,
    dump_lp,
    emit_report,
    run_experiment,
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="banditfolio",
        description="Risk-aware bandit portfolio experiments on simulated or CSV price data.",
    )
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--out", help="output directory (overrides config 'out')")
    p.add_argument("--seeds", help="comma-separated seeds (overrides config)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named parameter set")
    p.add_argument("--filter-only", action="store_true",
                   help="emit tree.json/spectrum.csv without running the engine")
    p.add_argument("--workers", type=int, help="worker processes (capped by BANDITFOLIO_THREADS)")
    p.add_argument("--dump-lp", action="store_true",
                   help="also write the first seed's trial-1 CVaR program as text")
    p.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    return p


def parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise ConfigError("--seeds is empty")
    return seeds


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        raw = {}
        if args.config:
            with open(args.config) as fh:
                raw = json.load(fh)
            if not isinstance(raw, dict):
                raise ConfigError(f"{args.config}: config must be a JSON object")
        if args.seeds:
            raw["seeds"] = parse_seeds(args.seeds)
        if args.out:
            raw["out"] = args.out
        if args.filter_only:
            raw.setdefault("filter_enabled", True)
        cfg = ExperimentConfig.from_dict(raw, preset=args.preset)
        if args.filter_only and not cfg.filter_enabled:
            raise ConfigError("--filter-only needs filter_enabled")
        if args.dump_lp:
            dump_lp(cfg, cfg.out)
        summary, results = run_experiment(cfg, workers=args.workers, filter_only=args.filter_only)
        emit_report(summary, results, cfg.out)
    except (ConfigError, OSError, json.JSONDecodeError, ValueError) as exc:
        logging.error("%s", exc)
        return 2
    logging.info("finished %d seed(s) in %.1fs", len(results), summary.runtime)
    return 1 if summary.failures else 0


if __name__ == "__main__":
    sys.exit(main())
