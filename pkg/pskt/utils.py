# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
import enum
import logging
import os

import numpy as np

from pskt.exceptions import PrecisionError


class Precision(enum.Enum):
    F32 = "f32"
    F64 = "f64"

    @property
    def dtype(self):
        return DATATYPES[self.value]

    @property
    def code(self):
        # dtype byte of the PSKM header
        return 0 if self is Precision.F32 else 1

    @classmethod
    def from_dtype(cls, dtype):
        dtype = np.dtype(dtype)
        for name, value in DATATYPES.items():
            if dtype == value:
                return cls(name)
        raise PrecisionError(f"Unsupported dtype {dtype}. Expected one of {list(DATATYPES.keys())}.")

    @classmethod
    def from_code(cls, code):
        if code not in (0, 1):
            raise PrecisionError(f"Unknown PSKM dtype code {code}.")
        return cls.F32 if code == 0 else cls.F64


DATATYPES = {
    "f32": np.float32,
    "f64": np.float64,
}

# Desk-scale caps for the quadratic reference computations.
NAIVE_MAX_N = 8192
AMM_MAX_N = 512
AMM_MAX_H = 16

SUPPORTED_DEGREES = (2, 4, 8, 16)


def num_threads():
    """Number of worker threads allowed by ``PSK_THREADS`` (default 1)."""
    value = os.environ.get("PSK_THREADS", "")
    if not value:
        return 1
    try:
        threads = int(value)
    except ValueError:
        logging.warning(f"Ignoring PSK_THREADS={value!r}, expected a positive integer.")
        return 1
    return max(1, threads)

