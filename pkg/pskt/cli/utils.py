# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
import argparse
import csv
import logging
import pathlib
import sys
from contextlib import contextmanager

from pskt import pskm_io
from pskt.rng import UINT64_MAX
from pskt.utils import DATATYPES

BENCH_FIELDS = ("mechanism", "n", "h", "r", "p", "b", "local", "seed", "wall_time_us", "us_per_token", "rel_error")


def setup_logging(verbosity_level):
    levels = [logging.WARNING, logging.INFO, logging.DEBUG]
    level = levels[min(len(levels) - 1, verbosity_level)]

    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    logging.warning("Research software: sketched attention is approximate and all sizes are desk scale.")


def seed_type(value):
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value} is not an integer seed.")
    if not 0 <= seed <= UINT64_MAX:
        raise argparse.ArgumentTypeError(f"{value} is not an unsigned 64-bit seed.")
    return seed


def positive_int(value):
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value} is not an integer.")
    if number < 1:
        raise argparse.ArgumentTypeError(f"{value} is not a positive integer.")
    return number


def int_list(value):
    """Comma separated positive integers, e.g. ``4,16,64``."""
    items = [_.strip() for _ in value.split(",") if _.strip()]
    if not items:
        raise argparse.ArgumentTypeError(f"{value!r} is not a comma separated list of positive integers.")
    return [positive_int(_) for _ in items]


def output_path(path):
    path = pathlib.Path(path)
    if str(path) == "-" or path.parent.is_dir():
        return path
    raise argparse.ArgumentTypeError(f"{path.parent} is not a valid directory.")


def refuse(message):
    """Stop the command with exit status 1."""
    sys.exit(f"error: {message}")


class BaseArgs(argparse.ArgumentParser):
    """
    Defines global default arguments.
    """

    def __init__(self, description=None, epilog=None, **overrides):
        """
        Parameters
        ----------
        epilog : str
        description : str
        overrides : (dict, optional)
            Keyword arguments used to override default argument values
        """
        super().__init__(
            description=description,
            epilog=epilog,
            formatter_class=argparse.RawDescriptionHelpFormatter,
            add_help=False,
        )

        self.add_argument("--seed", type=seed_type, default=0, help="Unsigned 64-bit seed of every random draw.")
        self.add_argument(
            "--precision",
            type=str,
            choices=list(DATATYPES.keys()),
            default="f64",
            help="Storage precision of generated matrices.",
        )
        self.add_argument("-v", "--verbose", action="count", help="Verbosity level", default=0)
        self.set_defaults(**overrides)


@contextmanager
def open_output(path):
    """Text handle on ``path``, or on stdout when ``path`` is ``-`` or not given."""
    if path is None or str(path) == "-":
        yield sys.stdout
        return
    with open(path, "w", newline="") as file_handler:
        yield file_handler


def write_records(path, records):
    """Write bench records (dicts with :data:`BENCH_FIELDS`) as CSV."""
    with open_output(path) as file_handler:
        writer = csv.DictWriter(file_handler, fieldnames=BENCH_FIELDS, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow(record)
    if path is not None and str(path) != "-":
        logging.info(f"Wrote {len(records)} records to {path}.")


def write_matrix(path, matrix):
    """Write CSV for a ``.csv`` suffix, PSKM otherwise."""
    path = pathlib.Path(path)
    try:
        if path.suffix.lower() == ".csv":
            pskm_io.write_csv(path, matrix)
        else:
            pskm_io.write(path, matrix)
    except OSError as e:
        refuse(f"cannot write {path}: {e}")
    logging.info(f"Wrote {matrix.shape[0]}x{matrix.shape[1]} matrix to {path}.")
