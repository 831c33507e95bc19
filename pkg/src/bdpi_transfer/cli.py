"""Command-line entry point: ``run``, ``summarize``, ``plot`` and ``expert``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .harness import (
    SETTINGS, ExperimentConfig, emit_plot, expert_returns, ranking, read_records, read_stats,
    run_setting, summarize, write_stats,
)
from .harness.config import parse_seeds

log = logging.getLogger("bdpi_transfer")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bdpi-transfer", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train one setting over several seeds")
    run.add_argument("--config", type=Path, help="key = value overrides")
    run.add_argument("--setting", required=True, choices=sorted(SETTINGS))
    run.add_argument("--seeds", help="comma-separated, e.g. 1,2,3")
    run.add_argument("--episodes", type=int)
    run.add_argument("--episode-cap", type=int)
    run.add_argument("--train-every", type=int)
    run.add_argument("--out", type=Path, required=True, help="directory for <setting>.csv")
    run.add_argument("--save-advisor", type=Path)
    run.add_argument("--advisor", type=Path)
    run.add_argument("--wall-clock", action="store_true", help="log wall seconds instead of simulated time")

    summ = sub.add_parser("summarize", help="aggregate run CSVs into per-episode statistics")
    summ.add_argument("--in", dest="inp", type=Path, required=True)
    summ.add_argument("--out", type=Path, required=True)

    plot = sub.add_parser("plot", help="draw learning curves from a stats CSV")
    plot.add_argument("--in", dest="inp", type=Path, required=True)
    plot.add_argument("--out", type=Path, required=True)

    exp = sub.add_parser("expert", help="mean return of the scripted controller")
    exp.add_argument("--seeds", default="1,2,3")
    exp.add_argument("--episodes", type=int, default=10)
    exp.add_argument("--episode-cap", type=int, default=200)
    return p


def _run(args) -> int:
    cfg = ExperimentConfig.from_file(
        args.setting, args.config,
        seeds=parse_seeds(args.seeds) if args.seeds else None,
        episodes=args.episodes, episode_cap=args.episode_cap, train_every=args.train_every,
        out_dir=args.out, save_advisor=args.save_advisor, advisor_path=args.advisor,
        clock="wall" if args.wall_clock else None,
    )
    records = run_setting(cfg, progress=lambda r: log.info("seed %d episode %d return %.1f",
                                                           r.seed, r.episode, r.episode_return))
    print(f"{cfg.setting}: {len(records)} episodes written to {args.out / (cfg.setting + '.csv')}")
    return 0


def _summarize(args) -> int:
    stats = summarize(read_records(args.inp))
    write_stats(stats, args.out)
    for setting, score in ranking(stats):
        print(f"{setting}\t{score:.2f}")
    return 0


def _expert(args) -> int:
    returns = expert_returns(args.episode_cap, args.episodes, parse_seeds(args.seeds))
    print(f"{np.mean(returns):.2f}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "summarize":
            return _summarize(args)
        if args.command == "plot":
            emit_plot(read_stats(args.inp), args.out)
            return 0
        return _expert(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
