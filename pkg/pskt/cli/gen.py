# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""psk gen: write a reproducible random matrix."""
from pskt.cli.utils import output_path, positive_int, write_matrix
from pskt.rng import DISTRIBUTIONS, random_matrix


def add_arguments(parser):
    parser.add_argument("--rows", type=positive_int, required=True, help="Number of rows.")
    parser.add_argument("--cols", type=positive_int, required=True, help="Number of columns.")
    parser.add_argument("--dist", choices=DISTRIBUTIONS, default="gaussian", help="Distribution of the rows.")
    parser.add_argument(
        "--out",
        type=output_path,
        required=True,
        help="Output file. A `.csv` suffix writes CSV, anything else the binary PSKM format.",
    )


def run(args):
    matrix = random_matrix(args.rows, args.cols, args.seed, dist=args.dist, precision=args.precision)
    write_matrix(args.out, matrix)
    return 0
