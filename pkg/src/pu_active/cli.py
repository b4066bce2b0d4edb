"""Command line entry point: ``run``, ``bench``, ``label`` and ``info``.

Exit codes: 0 success, 1 validation failure, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from .data import DatasetError, Label, pool_from_labels, validate_dataset
from .experiment import (
    ExperimentConfig,
    FormatError,
    bench_config,
    load_dataset,
    run_experiment,
    tune_hyperparameters,
    write_csv,
)
from .loop import InteractiveOracle, LoopConfig, ModelParams, run_loop
from .metrics import sign_test
from .strategies import ALL_STRATEGIES, StrategyKind, StrategyParams

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _strategies(value: str):
    if value == "all":
        return ALL_STRATEGIES
    return tuple(StrategyKind.parse(v) for v in value.split(","))


def _shape(value: str):
    return tuple(int(v) for v in value.lower().split("x"))


def cmd_info(args) -> int:
    ds = load_dataset(args.dataset)
    report = validate_dataset(ds)
    print(report)
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.jobs:
        cfg = replace(cfg, n_jobs=args.jobs)
    summary = run_experiment(cfg)
    print(summary.table())
    print(f"results written to {summary.output}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = bench_config(seeds=args.seeds, budget=args.budget, strategies=_strategies(args.strategies),
                       output=args.output, n_jobs=args.jobs)
    summary = run_experiment(cfg)
    print(summary.table())
    if StrategyKind.RANDOM in cfg.strategies and len(cfg.seeds) >= 2:
        rand = summary.gains(StrategyKind.RANDOM)
        for s in cfg.strategies:
            if s != StrategyKind.RANDOM:
                print(f"sign test {s.value} > random: p = {sign_test(summary.gains(s), rand):.3g}")
    print(f"results written to {summary.output}")
    return EXIT_OK


def cmd_label(args) -> int:
    ds = load_dataset(args.dataset)
    report = validate_dataset(ds)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_INVALID
    pool = pool_from_labels(ds)
    if len(pool.positives) < 2:
        print("need at least two rows labelled 1 to start", file=sys.stderr)
        return EXIT_INVALID
    budget = min(args.budget, len(pool.unlabeled))
    tuning = tune_hyperparameters(ds, pool, seed=args.seed)
    hyper = ModelParams(gamma=tuning.gamma, C_pos=tuning.C, C_neg=tuning.C,
                        h_pos=tuning.h_pos, h_all=tuning.h_all,
                        strategy=StrategyParams(seed=args.seed))
    oracle = InteractiveOracle(ds.X, display_shape=_shape(args.display_shape) if args.display_shape else None)
    trace = run_loop(ds, pool, LoopConfig(budget=budget, strategy=args.strategy), oracle, hyper)
    n_pos = sum(r.oracle_answer == Label.POSITIVE for r in trace)
    print(f"{len(trace)} sample(s) labelled ({n_pos} target)" + (" - aborted" if trace.aborted else ""))
    if args.save:
        truth = ds.truth.copy()
        for r in trace:
            truth[r.selected_id] = int(r.oracle_answer)
        write_csv(replace(ds, truth=truth), args.save)
        print(f"labels saved to {args.save}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pu-active", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a YAML config")
    run.add_argument("--config", required=True)
    run.add_argument("--jobs", type=int, default=0, help="override n_jobs")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="built-in synthetic benchmark")
    bench.add_argument("--synthetic", action="store_true", default=True)
    bench.add_argument("--seeds", type=int, default=30)
    bench.add_argument("--budget", type=int, default=25)
    bench.add_argument("--strategies", default="all")
    bench.add_argument("--output", default="bench_results")
    bench.add_argument("--jobs", type=int, default=1)
    bench.set_defaults(func=cmd_bench)

    label = sub.add_parser("label", help="interactive labelling with a terminal oracle")
    label.add_argument("--dataset", required=True)
    label.add_argument("--strategy", default="margin", type=StrategyKind.parse)
    label.add_argument("--budget", type=int, default=10)
    label.add_argument("--seed", type=int, default=0)
    label.add_argument("--display-shape", help="render rows as ASCII images, e.g. 16x16")
    label.add_argument("--save", help="write the dataset with the new labels to this CSV")
    label.set_defaults(func=cmd_label)

    info = sub.add_parser("info", help="validate a dataset file")
    info.add_argument("--dataset", required=True)
    info.set_defaults(func=cmd_info)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except (DatasetError, FormatError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
