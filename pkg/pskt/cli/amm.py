# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""psk amm: sweep the AMM error of the non-negative sketch over sketch sizes."""
import logging
import time

import numpy as np

from pskt.cli.utils import int_list, output_path, positive_int, refuse, write_records
from pskt.exceptions import CapExceededError, DegreeError
from pskt.rng import derive_seed, random_matrix
from pskt.sketch import amm_relative_error, check_degree, sample_sketch
from pskt.utils import AMM_MAX_H, AMM_MAX_N


def add_arguments(parser):
    parser.add_argument("--n", type=positive_int, default=32, help=f"Rows of Q and K (at most {AMM_MAX_N}).")
    parser.add_argument("--h", type=positive_int, default=8, help=f"Columns of Q and K (at most {AMM_MAX_H}).")
    parser.add_argument("--p", type=int, default=4, help="Degree, one of 2, 4, 8, 16.")
    parser.add_argument("--r-list", type=int_list, default=[4, 16, 64], help="Comma separated sketch sizes.")
    parser.add_argument("--trials", type=positive_int, default=30, help="Sketches sampled per sketch size.")
    parser.add_argument("--zero", action="store_true", help="Use all-zero Q and K (every error is 0).")
    parser.add_argument("--out", type=output_path, help="CSV output; stdout if omitted.")


def sweep(n, h, p, r_list, trials, seed, zero=False):
    """One record per ``(r, trial)``; Q and K have unit-norm rows and are redrawn every trial."""
    records = []
    for r in r_list:
        for trial in range(trials):
            if zero:
                q = k = np.zeros((n, h))
            else:
                q = random_matrix(n, h, seed, dist="unit-rows", path=(trial, 0))
                k = random_matrix(n, h, seed, dist="unit-rows", path=(trial, 1))
            trial_seed = derive_seed(seed, (r, trial))
            start = time.perf_counter()
            error = amm_relative_error(q, k, sample_sketch(h, r, p, trial_seed), p)
            elapsed = (time.perf_counter() - start) * 1e6
            records.append(
                {
                    "mechanism": "amm",
                    "n": n,
                    "h": h,
                    "r": r,
                    "p": p,
                    "b": "",
                    "local": "",
                    "seed": trial_seed,
                    "wall_time_us": f"{elapsed:.3f}",
                    "us_per_token": f"{elapsed / n:.6f}",
                    "rel_error": repr(error),
                }
            )
    return records


def run(args):
    if args.n > AMM_MAX_N or args.h > AMM_MAX_H:
        refuse(f"AMM sweeps materialize (QKᵀ)^p; need n <= {AMM_MAX_N} and h <= {AMM_MAX_H}.")
    try:
        check_degree(args.p)
        records = sweep(args.n, args.h, args.p, args.r_list, args.trials, args.seed, zero=args.zero)
    except (CapExceededError, DegreeError) as e:
        refuse(str(e))

    write_records(args.out, records)
    for r in args.r_list:
        median = np.median([float(_["rel_error"]) for _ in records if _["r"] == r])
        logging.info(f"r = {r}: median relative error {median:.6f} over {args.trials} trials.")
    return 0
