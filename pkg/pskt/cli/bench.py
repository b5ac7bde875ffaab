# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""psk bench: wall-clock latency of causal mechanisms over sequence lengths."""
import logging
import time

import numpy as np

from pskt.causal import (
    causal_exact_poly_attention,
    causal_polysketch_attention,
    causal_softmax_attention,
    lt_multiply_blocked,
    lt_multiply_naive,
)
from pskt.cli.utils import int_list, output_path, positive_int, refuse, write_records
from pskt.exceptions import DegreeError
from pskt.rng import random_matrix
from pskt.sketch import check_degree, sample_sketch
from pskt.utils import NAIVE_MAX_N

# Mechanisms whose cost is quadratic in n; they are refused beyond NAIVE_MAX_N.
QUADRATIC_MECHANISMS = ("exact-poly-causal", "lt-naive", "softmax-causal")
MECHANISMS = QUADRATIC_MECHANISMS + ("polysketch-causal", "lt-blocked")
# Parameters each mechanism depends on; the others are left empty in its records.
MECHANISM_PARAMETERS = {
    "exact-poly-causal": ("p",),
    "softmax-causal": (),
    "lt-naive": (),
    "lt-blocked": ("b",),
    "polysketch-causal": ("r", "p", "b", "local"),
}


def add_arguments(parser):
    parser.add_argument("--mechanism", choices=MECHANISMS, required=True, help="Mechanism to time.")
    parser.add_argument("--n-list", type=int_list, default=[512, 1024, 2048], help="Comma separated lengths.")
    parser.add_argument("--h", type=positive_int, default=64, help="Head dimension.")
    parser.add_argument("--r", type=positive_int, default=32, help="Sketch size.")
    parser.add_argument("--p", type=int, default=4, help="Degree, one of 2, 4, 8, 16.")
    parser.add_argument("--block", type=positive_int, default=256, help="Block size, capped at n.")
    parser.add_argument("--local", action="store_true", help="Exact polynomial weights inside diagonal blocks.")
    parser.add_argument("--reps", type=positive_int, default=3, help="Repetitions; the median is reported.")
    parser.add_argument("--out", type=output_path, help="CSV output; stdout if omitted.")


def mechanism_call(mechanism, q, k, v, p, block_size, local, tree):
    """A zero-argument callable running ``mechanism`` once."""
    calls = {
        "exact-poly-causal": lambda: causal_exact_poly_attention(q, k, v, p),
        "softmax-causal": lambda: causal_softmax_attention(q, k, v),
        "lt-naive": lambda: lt_multiply_naive(q, k, v),
        "lt-blocked": lambda: lt_multiply_blocked(q, k, v, block_size),
        "polysketch-causal": lambda: causal_polysketch_attention(q, k, v, tree, block_size, local_exact=local),
    }
    return calls[mechanism]


def bench(mechanism, n_list, h, r, p, block_size, local, reps, seed, precision="f64"):
    tree = sample_sketch(h, r, p, seed) if mechanism == "polysketch-causal" else None
    records = []
    for n in n_list:
        q, k, v = (random_matrix(n, h, seed, path=(n, index), precision=precision) for index in range(3))
        # dot products of order one keep the p-th powers finite at any h
        q, k = q / h**0.25, k / h**0.25
        b = min(block_size, n)
        call = mechanism_call(mechanism, q, k, v, p, b, local, tree)

        timings = []
        for _ in range(reps):
            start = time.perf_counter()
            call()
            timings.append((time.perf_counter() - start) * 1e6)
        wall_time_us = float(np.median(timings))
        logging.info(f"{mechanism} n={n}: {wall_time_us / n:.3f} us per token.")
        parameters = {"r": r, "p": p, "b": b, "local": int(local)}
        used = MECHANISM_PARAMETERS[mechanism]
        records.append(
            {
                "mechanism": mechanism,
                "n": n,
                "h": h,
                **{name: value if name in used else "" for name, value in parameters.items()},
                "seed": seed,
                "wall_time_us": f"{wall_time_us:.3f}",
                "us_per_token": f"{wall_time_us / n:.6f}",
                "rel_error": "",
            }
        )
    return records


def run(args):
    if args.mechanism in QUADRATIC_MECHANISMS and max(args.n_list) > NAIVE_MAX_N:
        refuse(f"{args.mechanism} is quadratic in n and capped at n = {NAIVE_MAX_N}. Got {max(args.n_list)}.")
    try:
        check_degree(args.p)
    except DegreeError as e:
        refuse(str(e))
    records = bench(
        args.mechanism,
        args.n_list,
        h=args.h,
        r=args.r,
        p=args.p,
        block_size=args.block,
        local=args.local,
        reps=args.reps,
        seed=args.seed,
        precision=args.precision,
    )
    write_records(args.out, records)
    return 0
