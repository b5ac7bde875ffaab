# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Instrumented operation counters.

Kernels call :func:`record` with an operation name and an amount. Nothing is counted
unless a caller opened :func:`count_operations`::

    with count_operations() as counts:
        sketch.non_negative(Q)
    counts["matmul_h_r"]
"""
import contextlib
import contextvars
import threading
from collections import Counter

# Sketch operations are counted once per application to a batch of rows, which is the
# number of times each row goes through the operation.
MATMUL_H_R = "matmul_h_r"
MATMUL_R_R = "matmul_r_r"
HADAMARD = "hadamard"
SELF_TENSOR = "self_tensor"
DENSE_BLOCK = "dense_block"
# Multiply-add flops of the lower-triangular products.
FLOPS = "flops"

_active = contextvars.ContextVar("pskt_operation_counters", default=())


class OperationCounter(Counter):
    def __init__(self):
        super().__init__()
        self._lock = threading.Lock()

    def add(self, name, amount):
        with self._lock:
            self[name] += amount


def record(name, amount=1):
    for counter in _active.get():
        counter.add(name, amount)


@contextlib.contextmanager
def count_operations():
    counter = OperationCounter()
    token = _active.set(_active.get() + (counter,))
    try:
        yield counter
    finally:
        _active.reset(token)
