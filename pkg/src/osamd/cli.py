"""Command-line entry point: ``osamd run|validate|oracle|scenario``.

Exit status is 0 on success, 1 for an invalid configuration and 2 when a
run fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    comparator_table,
    emit_results,
    load_config,
    run_experiment,
    label_flip_scenario,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override base_seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--repeats", type=int, help="override the number of repeats")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    parser = argparse.ArgumentParser(prog="osamd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run an experiment and write results")
    p.add_argument("config", nargs="?", help="YAML config; defaults reproduce the Gaussian experiment")
    p = sub.add_parser("validate", parents=[common], help="check a config without running it")
    p.add_argument("config", nargs="?")
    p = sub.add_parser("oracle", parents=[common], help="precompute the comparator series")
    p.add_argument("config", nargs="?")
    p = sub.add_parser("scenario", parents=[common], help="run a built-in scenario")
    p.add_argument("name", choices=["theorem2"])
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out["base_seed"] = args.seed
    if args.repeats is not None:
        out["repeats"] = args.repeats
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "scenario":
            return _scenario(args)
        config = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "validate":
            print(f"ok: {len(config.learners)} learners, {config.repeats} repeats, "
                  f"{type(config.environment).__name__}")
            return EXIT_OK
        if args.command == "oracle":
            out = Path(args.out or config.output.get("directory", "results"))
            out.mkdir(parents=True, exist_ok=True)
            target = out / "comparator.json"
            target.write_text(json.dumps(comparator_table(config)) + "\n", encoding="utf-8")
            print(f"wrote {target}")
            return EXIT_OK
        result = run_experiment(config, jobs=args.jobs)
        out = emit_results(result, args.out)
        _print_summary(result.summary)
        print(f"results in {out}")
        failed = any(result.errors.values())
        return EXIT_RUNTIME if failed else EXIT_OK
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _scenario(args) -> int:
    kwargs = {"jobs": args.jobs}
    if args.seed is not None:
        kwargs["base_seed"] = args.seed
    if args.repeats is not None:
        kwargs["repeats"] = args.repeats
    try:
        result, report = label_flip_scenario(**kwargs)
        if args.out:
            out = emit_results(result, args.out)
            (out / "scenario.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                               encoding="utf-8")
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for name, row in report.items():
        print(f"{name:14s} post-flip loss {row['post_flip_loss_mean']:8.1f}  "
              f"post-flip regret {row['post_flip_regret_mean']:8.1f}  "
              f"queries {100 * row['query_fraction_mean']:5.1f}%")
    return EXIT_OK


def _print_summary(summary: dict):
    def pct(v):
        return "   n/a" if v is None else f"{100 * v:6.2f}"

    for name, row in summary.items():
        regret = row["final_regret_mean"]
        print(f"{name:14s} acc {pct(row['accuracy_mean'])}%  labels {pct(row['label_fraction_mean'])}%  "
              f"regret {'n/a' if regret is None else f'{regret:9.2f}'}"
              + (f"  ({len(row['errors'])} failed)" if row["errors"] else ""))


if __name__ == "__main__":
    sys.exit(main())
