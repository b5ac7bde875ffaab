# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Causal attention in time linear in the sequence length.

``lt(A Bᵀ) C`` is computed block by block. With rows split into blocks ``B_1 ... B_t`` of
``b`` rows each (the last block may be shorter):

* ``P_l = lt(A_l B_lᵀ) C_l`` handles pairs inside the diagonal block,
* ``H_l = B_lᵀ C_l`` summarizes block ``l`` for the blocks after it,
* ``Z_l = Σ_{j<l} H_j`` is a sequential prefix sum,
* rows of block ``l`` are ``P_l + A_l Z_l``.

The ``P_l`` and ``H_l`` are independent across blocks and are computed on a thread pool when
``PSK_THREADS`` allows it; the scan over ``Z_l`` is the only sequential step. Prefix state is
kept in double precision whatever the input precision is.
"""
import contextvars
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from pskt import counters
from pskt.attention import check_qkv
from pskt.exceptions import CapExceededError, ShapeError
from pskt.matrix import as_matrix, check_operands, lt_mask, power_by_squaring, row_self_tensor, stable_softmax_rows
from pskt.sketch import clamped_feature_gram
from pskt.utils import NAIVE_MAX_N, num_threads

# Query rows per chunk of the exact causal reference.
EXACT_ROW_CHUNK = 1024


class BlockPlan(NamedTuple):
    n: int
    block_size: int

    @property
    def num_blocks(self):
        return math.ceil(self.n / self.block_size)

    def bounds(self, index):
        """Row range ``[start, stop)`` of block ``index`` (0-based)."""
        start = index * self.block_size
        return start, min(start + self.block_size, self.n)

    def __iter__(self):
        return iter(self.bounds(index) for index in range(self.num_blocks))


def make_plan(n, block_size):
    if not 1 <= block_size <= n:
        raise ValueError(f"Block size must satisfy 1 <= b <= n = {n}. Got {block_size}.")
    return BlockPlan(n=n, block_size=block_size)


def _f64(matrix):
    return np.asarray(matrix, dtype=np.float64)


def _map_blocks(function, plan):
    blocks = list(plan)
    threads = min(num_threads(), len(blocks))
    if threads <= 1:
        return [function(start, stop) for start, stop in blocks]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        # Each task runs in a copy of the caller's context so operation counters see it.
        futures = [executor.submit(contextvars.copy_context().run, function, start, stop) for start, stop in blocks]
        return [future.result() for future in futures]


def _check_lt_operands(a, b, c):
    a, b, c = check_operands(a, b, c)
    if a.shape != b.shape:
        raise ShapeError(f"A and B must have the same shape. Got {a.shape} and {b.shape}.")
    if c.shape[0] != a.shape[0]:
        raise ShapeError(f"C must have {a.shape[0]} rows. Got {c.shape[0]}.")
    return a, b, c


def _check_cap(n):
    if n > NAIVE_MAX_N:
        raise CapExceededError(f"Quadratic reference computations need n <= {NAIVE_MAX_N}. Got {n}.")


def lt_multiply_naive(a, b, c):
    """``lt(A Bᵀ) C`` by materializing ``A Bᵀ``."""
    a, b, c = _check_lt_operands(a, b, c)
    _check_cap(a.shape[0])
    return (lt_mask(_f64(a) @ _f64(b).T) @ _f64(c)).astype(a.dtype)


def _blocked(a, b, c, plan, diagonal=None):
    """Blocked lower-triangular product on double-precision operands.

    ``diagonal(start, stop)`` may supply the weights of a diagonal block in place of
    ``A_l B_lᵀ``; they are masked with ``lt`` before use.
    """
    m, k = b.shape[1], c.shape[1]

    def _block(start, stop):
        rows = stop - start
        weights = a[start:stop] @ b[start:stop].T if diagonal is None else diagonal(start, stop)
        local = lt_mask(weights) @ c[start:stop]
        summary = b[start:stop].T @ c[start:stop]
        counters.record(counters.FLOPS, 2 * rows * rows * (m + k) + 2 * rows * m * k)
        return local, summary

    products = _map_blocks(_block, plan)

    out = np.empty((plan.n, k), dtype=np.float64)
    prefix = np.zeros((m, k), dtype=np.float64)
    for (start, stop), (local, summary) in zip(plan, products):
        out[start:stop] = local + a[start:stop] @ prefix
        prefix += summary
        counters.record(counters.FLOPS, 2 * (stop - start) * m * k + m * k)
    return out


def lt_multiply_blocked(a, b, c, block_size):
    """``lt(A Bᵀ) C`` in ``O(n b (m + k))`` time without forming ``A Bᵀ``.

    Arguments
    ---------
    a, b : np.ndarray
        ``n x m`` matrices.
    c : np.ndarray
        ``n x k`` matrix.
    block_size : int
        Rows per block, ``1 <= block_size <= n``. The last block may be partial.

    Returns
    -------
    np.ndarray
    """
    a, b, c = _check_lt_operands(a, b, c)
    plan = make_plan(a.shape[0], block_size)
    return _blocked(_f64(a), _f64(b), _f64(c), plan).astype(a.dtype)


def block_prefix_states(b, c, block_size):
    """Prefix state ``Σ_{i < stop_l} b_i c_iᵀ`` after each block, in block order."""
    b, c = check_operands(b, c)
    if b.shape[0] != c.shape[0]:
        raise ShapeError(f"B and C need the same number of rows. Got {b.shape} and {c.shape}.")
    plan = make_plan(b.shape[0], block_size)
    b64, c64 = _f64(b), _f64(c)
    states = []
    prefix = np.zeros((b.shape[1], c.shape[1]), dtype=np.float64)
    for start, stop in plan:
        prefix = prefix + b64[start:stop].T @ c64[start:stop]
        states.append(prefix)
    return states


def _with_ones(v):
    v64 = _f64(v)
    return np.hstack([v64, np.ones((v64.shape[0], 1))])


def causal_exact_poly_attention(q, k, v, p):
    """Row ``i`` is ``Σ_{j<=i} ⟨q_i,k_j⟩^p v_j / (1 + Σ_{j<=i} ⟨q_i,k_j⟩^p)``.

    Quadratic in ``n``; the weights are formed for chunks of query rows at a time.
    """
    q, k, v = check_qkv(q, k, v)
    if q.shape[0] != k.shape[0]:
        raise ShapeError(f"Causal attention needs as many queries as keys. Got {q.shape[0]} and {k.shape[0]}.")
    n = q.shape[0]
    _check_cap(n)
    q64, k64, v64 = _f64(q), _f64(k), _f64(v)
    out = np.empty((n, v.shape[1]), dtype=np.float64)
    # query rows [start, stop) only see keys [0, stop)
    for start in range(0, n, EXACT_ROW_CHUNK):
        stop = min(start + EXACT_ROW_CHUNK, n)
        weights = power_by_squaring(q64[start:stop] @ k64[:stop].T, p)
        weights[np.arange(stop)[None, :] > np.arange(start, stop)[:, None]] = 0.0
        out[start:stop] = (weights @ v64[:stop]) / (1.0 + weights.sum(axis=1, keepdims=True))
    return out.astype(q.dtype)


def causal_softmax_attention(q, k, v, beta=None):
    """Causal softmax attention, row ``i`` attending to ``j <= i``; ``beta`` defaults to ``sqrt(h)``."""
    q, k, v = check_qkv(q, k, v)
    if q.shape[0] != k.shape[0]:
        raise ShapeError(f"Causal attention needs as many queries as keys. Got {q.shape[0]} and {k.shape[0]}.")
    _check_cap(q.shape[0])
    beta = math.sqrt(q.shape[1]) if beta is None else beta
    logits = _f64(q) @ _f64(k).T
    logits[np.triu_indices_from(logits, k=1)] = -np.inf
    return (stable_softmax_rows(logits, beta) @ _f64(v)).astype(q.dtype)


def causal_polysketch_terms(q, k, v, feature_map, block_size, local_exact=False):
    """Numerator ``n x h`` and denominator ``n x 1`` of causal sketched polynomial attention.

    Cross-block terms use prefix sums of ``φ′(K)_lᵀ [V_l | 1]`` (state ``r² x (h+1)``). Inside a
    diagonal block the weights are ``(L_l R_lᵀ)^2`` with ``L, R`` the signed sketches of the
    block's queries and keys, which equals ``φ′(Q)_l φ′(K)_lᵀ`` at ``O(b² r)`` cost, or the exact
    ``(Q_l K_lᵀ)^p`` when ``local_exact`` is set.

    Arguments
    ---------
    q, k, v : np.ndarray
        ``n x h`` queries, keys and values.
    feature_map : FeatureMap
        Shared by queries and keys; a :class:`~pskt.sketch.SketchTree` or learnable parameters.
    block_size : int
        Rows per block, ``1 <= block_size <= n``.
    local_exact : bool
        Use exact polynomial weights inside diagonal blocks.

    Returns
    -------
    (np.ndarray, np.ndarray)
        Numerator in double precision and denominator, every entry of which is at least one.
    """
    q, k, v = check_qkv(q, k, v)
    if q.shape[0] != k.shape[0]:
        raise ShapeError(f"Causal attention needs as many queries as keys. Got {q.shape[0]} and {k.shape[0]}.")
    plan = make_plan(q.shape[0], block_size)
    p = feature_map.degree

    left = _f64(feature_map.with_negativity(q))
    right = _f64(feature_map.with_negativity(k))
    phi_q = row_self_tensor(left)
    phi_k = row_self_tensor(right)
    counters.record(counters.SELF_TENSOR, 2)
    q64, k64 = _f64(q), _f64(k)

    def _diagonal(start, stop):
        if local_exact:
            return power_by_squaring(q64[start:stop] @ k64[start:stop].T, p)
        return np.square(left[start:stop] @ right[start:stop].T)

    out = _blocked(phi_q, phi_k, _with_ones(v), plan, diagonal=_diagonal)
    # query mass mixes sketched dot products; clamp cancellation below zero
    denominator = 1.0 + np.maximum(out[:, -1:], 0.0)
    logging.debug(f"Causal polysketch attention: n={plan.n}, b={plan.block_size}, blocks={plan.num_blocks}.")
    return out[:, :-1], denominator


def causal_polysketch_attention(q, k, v, feature_map, block_size, local_exact=False):
    """Causal sketched polynomial attention in time linear in ``n``; see :func:`causal_polysketch_terms`."""
    numerator, denominator = causal_polysketch_terms(q, k, v, feature_map, block_size, local_exact=local_exact)
    return (numerator / denominator).astype(as_matrix(q).dtype)


def feature_prefix_states(k, v, feature_map, block_size):
    """Prefix state ``Σ_{j < stop_l} φ′(k_j) [v_jᵀ | 1]`` after each block."""
    phi_k = _f64(feature_map.non_negative(k))
    return block_prefix_states(phi_k, _with_ones(v), block_size)


def naive_causal_polysketch(q, k, v, feature_map):
    """Materialized ``D̃⁻¹ lt(φ′(Q) φ′(K)ᵀ) V``, the oracle of :func:`causal_polysketch_attention`."""
    q, k, v = check_qkv(q, k, v)
    _check_cap(q.shape[0])
    weights = lt_mask(clamped_feature_gram(feature_map.non_negative(q), feature_map.non_negative(k)))
    denominator = 1.0 + weights.sum(axis=1, keepdims=True)
    return ((weights @ _f64(v)) / denominator).astype(q.dtype)


def hybrid_causal_oracle(q, k, v, feature_map, block_size):
    """Materialized oracle for ``local_exact=True``: exact weights inside diagonal blocks, sketched across."""
    q, k, v = check_qkv(q, k, v)
    _check_cap(q.shape[0])
    plan = make_plan(q.shape[0], block_size)
    sketched = clamped_feature_gram(feature_map.non_negative(q), feature_map.non_negative(k))
    exact = power_by_squaring(_f64(q) @ _f64(k).T, feature_map.degree)
    block_ids = np.arange(plan.n) // plan.block_size
    same_block = block_ids[:, None] == block_ids[None, :]
    weights = lt_mask(np.where(same_block, exact, sketched))
    denominator = 1.0 + weights.sum(axis=1, keepdims=True)
    return ((weights @ _f64(v)) / denominator).astype(q.dtype)
