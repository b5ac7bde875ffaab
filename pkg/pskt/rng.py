# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Reproducible Gaussian streams.

Every random matrix in pskt comes from the same recipe so it can be regenerated in any
language:

1. A stream is identified by a 64-bit ``seed`` and a tuple of small non-negative integers
   (the ``path``). NumPy's ``SeedSequence(seed, spawn_key=path)`` (a documented hash-based
   seed expander) turns the pair into the 128-bit state of a PCG64 generator
   (PCG XSL-RR 128/64).
2. Uniform doubles are ``(next_uint64 >> 11) * 2**-53``, i.e. 53-bit fractions in [0, 1).
3. Gaussians are produced by Box–Muller from consecutive uniform pairs ``(u1, u2)``:
   ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`` then ``sqrt(-2 ln(1 - u1)) * sin(2 pi u2)``.
   Matrices are filled in row-major order.
"""
from typing import NamedTuple, Tuple

import numpy as np

from pskt.utils import Precision

UINT64_MAX = 2**64 - 1


class RngSpec(NamedTuple):
    seed: int
    algorithm: str = "PCG64 (XSL-RR 128/64) seeded via numpy SeedSequence"
    gaussian_method: str = "Box-Muller"


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= UINT64_MAX:
        raise ValueError(f"Seed must be an unsigned 64-bit integer. Got {seed}.")
    return seed


def _bit_generator(seed, path):
    sequence = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(_) for _ in path))
    return np.random.PCG64(sequence)


def uniform_stream(seed, path: Tuple[int, ...], count):
    """``count`` uniform doubles in [0, 1) from the stream ``(seed, path)``."""
    raw = _bit_generator(seed, path).random_raw(count)
    return (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def gaussian_stream(seed, path: Tuple[int, ...], count):
    """``count`` standard normal values by Box–Muller over :func:`uniform_stream`."""
    pairs = (count + 1) // 2
    uniforms = uniform_stream(seed, path, 2 * pairs).reshape(pairs, 2)
    radius = np.sqrt(-2.0 * np.log1p(-uniforms[:, 0]))
    angle = 2.0 * np.pi * uniforms[:, 1]
    values = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1).reshape(-1)
    return values[:count]


def gaussian_matrix(seed, path, rows, cols, scale=1.0):
    """A ``rows x cols`` matrix of i.i.d. N(0, scale^2) entries from the stream ``(seed, path)``."""
    return scale * gaussian_stream(seed, path, rows * cols).reshape(rows, cols)


DISTRIBUTIONS = ("gaussian", "unit-rows")


def random_matrix(rows, cols, seed, dist="gaussian", path=(), precision=None):
    """Reproducible test matrix.

    ``gaussian`` draws i.i.d. standard normal entries; ``unit-rows`` normalizes each such row
    to unit Euclidean norm (an all-zero row stays zero). The values are generated in double
    precision and cast to ``precision`` (default f64).
    """
    if dist not in DISTRIBUTIONS:
        raise ValueError(f"Unknown distribution {dist!r}. Expected one of {DISTRIBUTIONS}.")
    values = gaussian_matrix(seed, (0xD15,) + tuple(path), rows, cols)
    if dist == "unit-rows":
        norms = np.linalg.norm(values, axis=1, keepdims=True)
        values = values / np.where(norms > 0, norms, 1.0)
    dtype = np.float64 if precision is None else Precision(precision).dtype
    return values.astype(dtype)


def derive_seed(seed, path):
    """A 64-bit seed derived from ``(seed, path)``, for experiments that need many independent seeds."""
    sequence = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(_) for _ in path))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
