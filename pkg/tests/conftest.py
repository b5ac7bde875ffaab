# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture
def qkv(rng):
    """Factory for ``(Q, K, V)`` with Gaussian entries; Q and K scaled so ⟨q, k⟩ is of order one."""

    def _qkv(n, h, dtype=np.float64):
        q = rng.standard_normal((n, h)) / h**0.25
        k = rng.standard_normal((n, h)) / h**0.25
        v = rng.standard_normal((n, h))
        return q.astype(dtype), k.astype(dtype), v.astype(dtype)

    return _qkv
