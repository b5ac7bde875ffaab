# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""psk attn-compare: error of causal sketched attention against the exact polynomial oracle."""
import logging
import time

from pskt.causal import causal_exact_poly_attention, causal_polysketch_terms
from pskt.cli.utils import output_path, positive_int, refuse, write_records
from pskt.exceptions import CapExceededError, DegreeError
from pskt.learnable import init_params
from pskt.matrix import layer_norm_rows, relative_error
from pskt.rng import random_matrix
from pskt.sketch import sample_sketch
from pskt.utils import Precision


def add_arguments(parser):
    parser.add_argument("--p", type=int, default=4, help="Degree, one of 2, 4, 8, 16.")
    parser.add_argument("--n", type=positive_int, default=256, help="Sequence length.")
    parser.add_argument("--h", type=positive_int, default=16, help="Head dimension.")
    parser.add_argument("--r", type=positive_int, default=32, help="Sketch size.")
    parser.add_argument("--b", type=positive_int, default=64, help="Block size, capped at n.")
    parser.add_argument("--local", action="store_true", help="Exact polynomial weights inside diagonal blocks.")
    parser.add_argument(
        "--learned",
        action="store_true",
        help="Use freshly initialized learnable sketch networks instead of Gaussian projections.",
    )
    parser.add_argument("--out", type=output_path, help="Also write a CSV record to this path.")


def attention_inputs(n, h, seed, precision="f64"):
    """Layer-normalized queries and keys scaled by ``h^(-1/4)``, so ``⟨q, k⟩`` is of order one."""
    q, k, v = (random_matrix(n, h, seed, path=(index,)) for index in range(3))
    q = layer_norm_rows(q) / h**0.25
    k = layer_norm_rows(k) / h**0.25
    dtype = Precision(precision).dtype
    return q.astype(dtype), k.astype(dtype), v.astype(dtype)


def compare(p, n, h, r, b, seed, local=False, learned=False, precision="f64"):
    """Returns ``(relative error, smallest denominator, seconds)`` of one sketched causal run."""
    q, k, v = attention_inputs(n, h, seed, precision)
    feature_map = init_params(h, r, p, seed) if learned else sample_sketch(h, r, p, seed)
    start = time.perf_counter()
    numerator, denominator = causal_polysketch_terms(q, k, v, feature_map, min(b, n), local_exact=local)
    elapsed = time.perf_counter() - start
    approx = (numerator / denominator).astype(q.dtype)
    error = relative_error(approx, causal_exact_poly_attention(q, k, v, p))
    return error, float(denominator.min()), elapsed


def run(args):
    try:
        error, smallest, seconds = compare(
            args.p,
            args.n,
            args.h,
            args.r,
            args.b,
            args.seed,
            local=args.local,
            learned=args.learned,
            precision=args.precision,
        )
    except (CapExceededError, DegreeError) as e:
        refuse(str(e))

    kind = "learned" if args.learned else "random"
    print(
        f"p={args.p} n={args.n} h={args.h} r={args.r} b={min(args.b, args.n)} local={int(args.local)} "
        f"sketch={kind}: rel_error={error:.6e} min_denominator={smallest:.6f}"
    )
    if smallest < 1.0:
        logging.error(f"Denominator below one: {smallest}.")
        return 1
    if args.out:
        wall_time_us = seconds * 1e6
        record = {
            "mechanism": f"polysketch-causal-{kind}",
            "n": args.n,
            "h": args.h,
            "r": args.r,
            "p": args.p,
            "b": min(args.b, args.n),
            "local": int(args.local),
            "seed": args.seed,
            "wall_time_us": f"{wall_time_us:.3f}",
            "us_per_token": f"{wall_time_us / args.n:.6f}",
            "rel_error": repr(error),
        }
        write_records(args.out, [record])
    return 0
