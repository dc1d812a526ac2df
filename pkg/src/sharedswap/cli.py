"""Command line: run, classify or enumerate a scenario file."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .report import FORMATS, TEXT, emit_report, run_scenario
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATED = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sharedswap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file")
    common.add_argument("--format", choices=FORMATS, default=TEXT)
    common.add_argument("--seed", type=int, default=None)
    sub.add_parser("run", parents=[common], help="run the scenario's strategy profile")
    sub.add_parser("classify", parents=[common], help="classification and givers/keepers/takers only")
    enum = sub.add_parser("enumerate", parents=[common], help="run every profile up to a deviator bound")
    enum.add_argument("--bound", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.file)
    except ScenarioError as err:
        print(f"{args.file}: {err}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as err:
        print(f"{args.file}: {err.strerror}", file=sys.stderr)
        return EXIT_ERROR
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    if args.command == "classify":
        scenario = replace(scenario, classify_only=True)
    elif args.command == "enumerate":
        scenario = scenario.with_bound(args.bound if args.bound is not None else scenario.enumerate_bound or 1)
    else:
        scenario = replace(scenario, enumerate_bound=None)
    try:
        report = run_scenario(scenario)
    except ValueError as err:
        print(f"{args.file}: {err}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(emit_report(report, args.format))
    return EXIT_VIOLATED if report.honest_violation() else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
