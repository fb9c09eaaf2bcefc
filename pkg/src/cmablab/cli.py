"""Command-line entry point: run, compare and sweep subcommands."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .data import ALGORITHMS, ConfigError, ExperimentConfig, load_config, parse_config
from .harness import emit_results, run_experiment


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="config file (key = value lines)")
    parser.add_argument("--algorithm", choices=ALGORITHMS, help="policy to run")
    parser.add_argument("--m", type=int, help="number of base arms")
    parser.add_argument("--k", type=int, help="cardinality budget")
    parser.add_argument("--horizon", type=int, help="rounds per replication")
    parser.add_argument("--delta", type=float, help="confidence parameter (cmoss)")
    parser.add_argument("--gamma", type=float, help="mixing coefficient (exp3m)")
    parser.add_argument("--feedback", help="semi_bandit | cascade_disjunctive | cascade_conjunctive")
    parser.add_argument("--order", help="descending | ascending | as_given")
    parser.add_argument("--means", help="uniform(lo,hi) or affinity(users,items,low|high)")
    parser.add_argument("--seed", type=int, help="base seed")
    parser.add_argument("--runs", type=int, help="independent replications")
    parser.add_argument("--out", metavar="PATH", help="output path prefix")


def _build_config(args: argparse.Namespace, **extra) -> ExperimentConfig:
    overrides = dict(
        algorithm=args.algorithm, m=args.m, k=args.k, horizon=args.horizon,
        delta=args.delta, gamma=args.gamma, feedback=args.feedback,
        order=args.order, means=args.means, seed=args.seed, runs=args.runs,
        out=args.out)
    overrides.update(extra)
    if args.config:
        return load_config(args.config, **overrides)
    return parse_config("", **overrides)


def _report(result, paths) -> None:
    print(f"{result.config.algorithm}: final regret "
          f"{result.final_regret_mean:.3f} +- {result.final_regret_std:.3f} "
          f"({result.config.runs} runs x {result.config.horizon} rounds, "
          f"{result.runtime_mean_seconds:.3f} s policy time per run)")
    for p in paths:
        print(f"  wrote {p}")


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    result = run_experiment(config)
    _report(result, emit_results(result, config.output_path))
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    base = _build_config(args)
    names = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    if not names:
        raise ConfigError("--algorithms must list at least one algorithm")
    results = []
    for name in names:
        config = replace(base, algorithm=name,
                         output_path=f"{base.output_path}_{name}")
        result = run_experiment(config)
        _report(result, emit_results(result, config.output_path))
        results.append(result)

    table = Path(f"{base.output_path}_compare.csv")
    table.parent.mkdir(parents=True, exist_ok=True)
    rows = ["algorithm,final_regret_mean,final_regret_std"]
    rows.extend(f"{r.config.algorithm},{r.final_regret_mean!r},{r.final_regret_std!r}"
                for r in results)
    table.write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"  wrote {table}")

    header = f"{'algorithm':<10}{'final regret':>16}{'std':>12}{'sec/run':>10}"
    print(header)
    for r in results:
        print(f"{r.config.algorithm:<10}{r.final_regret_mean:>16.3f}"
              f"{r.final_regret_std:>12.3f}{r.runtime_mean_seconds:>10.3f}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values must be a comma-separated integer list: {exc}")
    if not values:
        raise ConfigError("--values must list at least one value")
    rows = [f"{args.vary},final_regret_mean,final_regret_std"]
    base_out = None
    for v in values:
        # each config is built from scratch with the swept value in place,
        # so defaults of the varied key never clash with the fixed one
        config = _build_config(args, **{args.vary: v})
        base_out = base_out or config.output_path
        config = replace(config, output_path=f"{base_out}_{args.vary}{v}")
        result = run_experiment(config)
        _report(result, emit_results(result, config.output_path))
        rows.append(f"{v},{result.final_regret_mean!r},{result.final_regret_std!r}")
    table = Path(f"{base_out}_sweep_{args.vary}.csv")
    table.parent.mkdir(parents=True, exist_ok=True)
    table.write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"  wrote {table}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmablab",
        description="Combinatorial bandit laboratory: run policies against "
                    "semi-bandit or cascading environments and emit regret curves.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment configuration")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="run several algorithms on one instance with shared seeds")
    _add_common(p_cmp)
    p_cmp.add_argument("--algorithms", default=",".join(ALGORITHMS),
                       help="comma-separated algorithm list")
    p_cmp.set_defaults(func=_cmd_compare)

    p_swp = sub.add_parser("sweep", help="vary k or m over a value list")
    _add_common(p_swp)
    p_swp.add_argument("--vary", choices=("k", "m"), required=True)
    p_swp.add_argument("--values", required=True, metavar="LIST",
                       help="comma-separated integers, e.g. 5,10,15")
    p_swp.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
