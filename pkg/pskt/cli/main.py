# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
import argparse
import sys

from pskt.cli import amm, bench, compare, gen, verify
from pskt.cli.utils import BaseArgs, setup_logging

COMMANDS = {
    "verify": verify,
    "amm": amm,
    "bench": bench,
    "gen": gen,
    "attn-compare": compare,
}


def build_parser():
    base_parser = BaseArgs()
    parser = argparse.ArgumentParser(
        prog="psk",
        description="psk verifies, sweeps and benchmarks polynomial sketches and linear-time polynomial attention.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, module in COMMANDS.items():
        summary = module.__doc__.split(": ", 1)[-1]
        subparser = subparsers.add_parser(name, parents=[base_parser], help=summary, description=summary)
        module.add_arguments(subparser)
        subparser.set_defaults(run=module.run)
    return parser


def main(argv=None):
    """Console script for psk."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    return args.run(args)


if __name__ == "__main__":
    sys.exit(main())  # pragma: no cover
