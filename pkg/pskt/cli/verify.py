# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""psk verify: run the invariant suites."""
import json
import logging

from pskt.cli.utils import output_path, refuse
from pskt.verify import SUITE_NAMES, format_report, run_suites


def add_arguments(parser):
    parser.add_argument(
        "--suite",
        action="append",
        choices=SUITE_NAMES + ("all",),
        help="Suite to run, may be repeated. Defaults to all.",
    )
    parser.add_argument("--format", choices=("text", "json"), default="text", help="Report format on stdout.")
    parser.add_argument("--report", type=output_path, help="Also write the JSON report to this path.")


def run(args):
    suites = args.suite or ["all"]
    logging.info(f"Running suites {', '.join(suites)} with seed {args.seed} in {args.precision}.")
    report = run_suites(suites, args.seed, args.precision)

    if args.format == "json":
        print(json.dumps(report, indent=2))
    else:
        print(format_report(report), end="")

    if args.report:
        try:
            args.report.write_text(json.dumps(report, indent=2) + "\n")
        except OSError as e:
            refuse(f"cannot write report {args.report}: {e}")

    return 0 if report["passed"] else 1
