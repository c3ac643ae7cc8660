"""Command-line entry point ``growthdesign``.

Exit codes: 0 success, 1 usage or schema error, 2 infeasible problem,
3 convergence failure (or any other failed cell).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from ..errors import DesignError, SchemaError, UsageError
from . import report as rp
from .config import PRESETS, load_config, preset
from .figures import FIGURE_KINDS, emit_figure_data, figure_csv
from .runner import run_scenario

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_CONVERGENCE = 0, 1, 2, 3
VERBS = ("solve", "certify", "efficiency", "sweep", "figure-data")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="growthdesign",
                     description="Locally D-optimal item allocations for growth curves.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for verb in VERBS:
        p = sub.add_parser(verb)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", help="scenario TOML file")
        src.add_argument("--preset", choices=PRESETS, help="built-in scenario")
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
        p.add_argument("--seed", type=int, help="override solver seed")
        p.add_argument("--tol", type=float, help="certificate tolerance")
        if verb == "figure-data":
            p.add_argument("--figure", required=True, choices=FIGURE_KINDS)
            src.add_argument("--report", help="existing report.json or its directory")
    return parser


def _load(args):
    if args.config:
        config = load_config(args.config)
    elif args.preset:
        config = preset(args.preset)
    else:
        raise UsageError("one of --config or --preset is required")
    if args.seed is not None:
        config = replace(config, solver=replace(config.solver, seed=args.seed))
    if args.tol is not None:
        if not args.tol > 0:
            raise SchemaError("--tol", "must be positive")
        config = replace(config, tol=args.tol)
    return config


def _exit_code(report: rp.RunReport) -> int:
    codes = {r.error_code for r in report.failures}
    if codes & {rp.ERR_INFEASIBLE, rp.ERR_CERTIFICATE, rp.ERR_PARAMETER}:
        return EXIT_INFEASIBLE
    if codes:
        return EXIT_CONVERGENCE
    return EXIT_OK


def _run(args) -> int:
    if args.jobs is not None and args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.verb == "figure-data" and args.report:
        report = rp.read_report(args.report)
    else:
        config = _load(args)
        mode = "sweep" if args.verb == "figure-data" else args.verb
        if mode in ("certify", "efficiency") and config.design is None:
            raise UsageError(f"{mode} needs a [design] table in the configuration")
        report = run_scenario(replace(config, mode=mode), jobs=args.jobs)

    if args.verb == "figure-data":
        if args.out:
            print(emit_figure_data(report, args.figure, args.out))
        else:
            sys.stdout.write(figure_csv(report, args.figure))
        return EXIT_OK if args.report else _exit_code(report)

    if args.out:
        rp.write_report(report, args.out)
        print(json.dumps(rp.summarize(report), indent=2, sort_keys=True))
    elif args.verb == "sweep":
        print(json.dumps(rp.summarize(report), indent=2, sort_keys=True))
    else:
        print(report.to_json())
    return _exit_code(report)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"growthdesign: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (SchemaError, UsageError) as exc:
        print(f"growthdesign: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"growthdesign: error: cannot read report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DesignError as exc:
        print(f"growthdesign: error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
