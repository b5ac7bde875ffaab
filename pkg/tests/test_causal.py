# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pskt import counters
from pskt.attention import exact_poly_attention
from pskt.causal import (
    BlockPlan,
    block_prefix_states,
    causal_exact_poly_attention,
    causal_polysketch_attention,
    causal_polysketch_terms,
    causal_softmax_attention,
    feature_prefix_states,
    hybrid_causal_oracle,
    lt_multiply_blocked,
    lt_multiply_naive,
    make_plan,
    naive_causal_polysketch,
)
from pskt.exceptions import CapExceededError, ShapeError
from pskt.matrix import relative_error
from pskt.sketch import sample_sketch


def test_block_plan():
    plan = make_plan(130, 32)
    assert plan.num_blocks == 5
    assert list(plan) == [(0, 32), (32, 64), (64, 96), (96, 128), (128, 130)]
    assert list(BlockPlan(4, 4)) == [(0, 4)]
    for b in (0, 131):
        with pytest.raises(ValueError):
            make_plan(130, b)


def test_lt_multiply_examples():
    assert_array_equal(lt_multiply_naive(np.eye(2), np.eye(2), np.eye(2)), np.eye(2))
    ones, c = np.ones((2, 1)), np.array([[1.0], [2.0]])
    assert_array_equal(lt_multiply_naive(ones, ones, c), [[1.0], [3.0]])
    assert_array_equal(lt_multiply_blocked(ones, ones, c, 1), [[1.0], [3.0]])
    assert_array_equal(lt_multiply_blocked(ones, ones, np.zeros((2, 3)), 2), np.zeros((2, 3)))


def test_lt_multiply_errors():
    with pytest.raises(ShapeError):
        lt_multiply_blocked(np.ones((3, 2)), np.ones((3, 3)), np.ones((3, 1)), 1)
    with pytest.raises(ShapeError):
        lt_multiply_naive(np.ones((3, 2)), np.ones((3, 2)), np.ones((2, 1)))
    big = np.ones((8193, 1))
    with pytest.raises(CapExceededError):
        lt_multiply_naive(big, big, big)


@pytest.mark.parametrize("n", [1, 7, 64, 130])
@pytest.mark.parametrize("b", [1, 8, 64, None])
@pytest.mark.parametrize("m", [1, 5, 17])
@pytest.mark.parametrize("k", [1, 5, 17])
def test_blocked_equals_naive(rng, n, b, m, k):
    b = n if b is None else min(b, n)
    a, bb, c = rng.standard_normal((n, m)), rng.standard_normal((n, m)), rng.standard_normal((n, k))
    assert relative_error(lt_multiply_blocked(a, bb, c, b), lt_multiply_naive(a, bb, c)) <= 1e-10


def test_single_block_is_naive(rng):
    a, b, c = rng.standard_normal((9, 3)), rng.standard_normal((9, 3)), rng.standard_normal((9, 2))
    assert_allclose(lt_multiply_blocked(a, b, c, 9), lt_multiply_naive(a, b, c), rtol=1e-14, atol=1e-14)


def test_unit_blocks_follow_recurrence(rng):
    a, b, c = rng.standard_normal((6, 3)), rng.standard_normal((6, 3)), rng.standard_normal((6, 2))
    expected = np.empty((6, 2))
    state = np.zeros((3, 2))
    for i in range(6):
        expected[i] = (a[i] @ b[i]) * c[i] + a[i] @ state
        state += np.outer(b[i], c[i])
    assert_allclose(lt_multiply_blocked(a, b, c, 1), expected, rtol=1e-12)


def test_blocked_keeps_precision(rng):
    a = rng.standard_normal((10, 2)).astype(np.float32)
    out = lt_multiply_blocked(a, a, a, 3)
    assert out.dtype == np.float32
    assert_allclose(out, lt_multiply_naive(a, a, a), rtol=1e-5, atol=1e-5)


def test_threads_give_identical_results(rng, monkeypatch):
    a, b, c = rng.standard_normal((100, 4)), rng.standard_normal((100, 4)), rng.standard_normal((100, 3))
    sequential = lt_multiply_blocked(a, b, c, 16)
    monkeypatch.setenv("PSK_THREADS", "4")
    with counters.count_operations() as counts:
        parallel = lt_multiply_blocked(a, b, c, 16)
    assert_array_equal(parallel, sequential)
    assert counts[counters.FLOPS] > 0


def test_flops_are_linear_in_n(rng):
    flops = []
    for n in (512, 1024):
        a, c = rng.standard_normal((n, 5)), rng.standard_normal((n, 3))
        with counters.count_operations() as counts:
            lt_multiply_blocked(a, a, c, 64)
        flops.append(counts[counters.FLOPS])
    assert flops[1] / flops[0] == pytest.approx(2.0, rel=0.05)


def test_prefix_states(rng):
    b, c = rng.standard_normal((20, 3)), rng.standard_normal((20, 2))
    states = block_prefix_states(b, c, 8)
    assert len(states) == 3
    assert_allclose(states[1], b[:16].T @ c[:16], rtol=1e-12)
    assert_allclose(states[-1], b.T @ c, rtol=1e-12)


def test_feature_prefix_states(qkv):
    _, k, v = qkv(50, 4)
    tree = sample_sketch(4, 4, 4, 0)
    states = feature_prefix_states(k, v, tree, 16)
    phi = tree.non_negative(k)
    assert states[0].shape == (16, 5)
    assert_allclose(states[2], phi[:48].T @ np.hstack([v[:48], np.ones((48, 1))]), rtol=1e-10)


def test_causal_exact_examples(qkv):
    q, k, v = qkv(1, 4)
    s = float(q[0] @ k[0]) ** 4
    assert_allclose(causal_exact_poly_attention(q, k, v, 4), v * s / (1 + s), rtol=1e-12)

    q, k, v = qkv(5, 4)
    assert_allclose(causal_exact_poly_attention(q, k, v, 4)[:1], exact_poly_attention(q[:1], k[:1], v[:1], 4))


def test_causal_exact_matches_masked_non_causal(qkv):
    q, k, v = qkv(12, 4)
    out = causal_exact_poly_attention(q, k, v, 4)
    for i in range(12):
        assert_allclose(out[i : i + 1], exact_poly_attention(q[i : i + 1], k[: i + 1], v[: i + 1], 4), rtol=1e-12)


def test_causal_exact_chunks(qkv, monkeypatch):
    q, k, v = qkv(40, 4)
    whole = causal_exact_poly_attention(q, k, v, 2)
    monkeypatch.setattr("pskt.causal.EXACT_ROW_CHUNK", 7)
    assert_allclose(causal_exact_poly_attention(q, k, v, 2), whole, rtol=1e-12)


def test_causal_softmax(qkv):
    q, k, v = qkv(6, 4)
    out = causal_softmax_attention(q, k, v)
    assert_allclose(out[0], v[0])
    weights = np.exp(q[3] @ k[:4].T / 2.0)
    assert_allclose(out[3], weights @ v[:4] / weights.sum(), rtol=1e-12)


def test_degree_two_is_exact(qkv):
    q, k, v = qkv(256, 8)
    out = causal_polysketch_attention(q, k, v, sample_sketch(8, 4, 2, 0), 32)
    assert relative_error(out, causal_exact_poly_attention(q, k, v, 2)) <= 1e-10


def test_single_exact_block_is_exact(qkv):
    q, k, v = qkv(96, 8)
    out = causal_polysketch_attention(q, k, v, sample_sketch(8, 64, 4, 1), 96, local_exact=True)
    assert relative_error(out, causal_exact_poly_attention(q, k, v, 4)) <= 1e-10


def test_sketched_matches_naive_oracle(qkv):
    q, k, v = qkv(256, 8)
    tree = sample_sketch(8, 64, 4, 2)
    out = causal_polysketch_attention(q, k, v, tree, 32)
    assert relative_error(out, naive_causal_polysketch(q, k, v, tree)) <= 1e-9


def test_local_exact_matches_hybrid_oracle(qkv):
    q, k, v = qkv(100, 8)
    tree = sample_sketch(8, 16, 4, 3)
    out = causal_polysketch_attention(q, k, v, tree, 16, local_exact=True)
    assert relative_error(out, hybrid_causal_oracle(q, k, v, tree, 16)) <= 1e-9


@pytest.mark.parametrize("local_exact", [False, True])
def test_causality(rng, qkv, local_exact):
    tree = sample_sketch(8, 16, 4, 4)
    for _ in range(20):
        q, k, v = qkv(128, 8)
        i = int(rng.integers(0, 127))
        k2, v2 = k.copy(), v.copy()
        k2[i + 1 :] = rng.standard_normal((127 - i, 8))
        v2[i + 1 :] = rng.standard_normal((127 - i, 8))
        before = causal_polysketch_attention(q, k, v, tree, 16, local_exact)
        after = causal_polysketch_attention(q, k2, v2, tree, 16, local_exact)
        assert_allclose(after[: i + 1], before[: i + 1], rtol=1e-12, atol=1e-12)
        assert_allclose(
            causal_exact_poly_attention(q, k2, v2, 4)[: i + 1],
            causal_exact_poly_attention(q, k, v, 4)[: i + 1],
            rtol=1e-12,
            atol=1e-12,
        )


@pytest.mark.parametrize("p", [2, 4, 8])
def test_denominators_at_least_one(qkv, p):
    q, k, v = qkv(64, 8)
    for local_exact in (False, True):
        numerator, denominator = causal_polysketch_terms(q, k, v, sample_sketch(8, 8, p, 5), 16, local_exact)
        assert numerator.shape == (64, 8)
        assert np.all(denominator >= 1.0)


def test_counts_of_causal_run(qkv):
    q, k, v = qkv(32, 4)
    tree = sample_sketch(4, 4, 8, 0)
    with counters.count_operations() as counts:
        causal_polysketch_attention(q, k, v, tree, 8)
    with counters.count_operations() as feature_counts:
        tree.non_negative(q)
        tree.non_negative(k)
    # Q and K are sketched and self-tensored once each
    assert counts[counters.MATMUL_H_R] == 2 * 4
    assert counts[counters.SELF_TENSOR] == 2
    for name in (counters.MATMUL_H_R, counters.MATMUL_R_R, counters.HADAMARD, counters.SELF_TENSOR):
        assert counts[name] == feature_counts[name]
