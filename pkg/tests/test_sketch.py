# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pskt import counters
from pskt.exceptions import CapExceededError, DegreeError, NegativeFeatureDotWarning, PSKMParseError, ShapeError
from pskt.pskm_io import read_container, write_container
from pskt.rng import derive_seed, random_matrix
from pskt.sketch import (
    amm_relative_error,
    apply_non_negative,
    apply_with_negativity,
    clamped_feature_gram,
    load_sketch,
    node_paths,
    sample_sketch,
    save_sketch,
)

# Median AMM error regression limits for p = 4, h = 8, n = 32, unit rows, 30 sketches.
# Observed medians 0.757, 0.245 and 0.104; limits leave 2x headroom.
AMM_MEDIAN_LIMITS = {4: 1.5, 16: 0.5, 64: 0.21}

UNBIASEDNESS_PAIRS = [
    ((1.0, 0.0), (1.0, 0.0)),
    ((1.0, 0.0), (0.0, 1.0)),
    ((1.0, 2.0), (3.0, -1.0)),
    ((0.6, -0.8), (0.8, 0.6)),
    ((0.5, 0.5), (1.0, 1.0)),
]


@pytest.mark.parametrize("p, expected", [(2, 0), (4, 2), (8, 6), (16, 14)])
def test_gaussian_count(p, expected):
    tree = sample_sketch(3, 4, p, 0)
    assert tree.degree_q == p // 2
    assert tree.gaussian_count == expected == p - 2


def test_projection_shapes():
    tree = sample_sketch(5, 3, 8, 0)
    assert [path for path, _ in node_paths(4)] == [(), (0,), (1,)]
    assert [m.shape for m in tree.nodes[()]] == [(3, 3), (3, 3)]
    assert [m.shape for m in tree.nodes[(1,)]] == [(5, 3), (5, 3)]


@pytest.mark.parametrize("p", [0, 3, 6, 12, 32, 64])
def test_bad_degree(p):
    with pytest.raises(DegreeError):
        sample_sketch(2, 2, p, 0)


def test_bad_sketch_size():
    with pytest.raises(ValueError):
        sample_sketch(2, 0, 4, 0)


def test_sketch_is_immutable():
    tree = sample_sketch(2, 2, 4, 0)
    with pytest.raises(ValueError):
        tree.nodes[()][0][0, 0] = 1.0


def test_same_seed_same_sketch(rng):
    a = rng.standard_normal((6, 4))
    first, second = sample_sketch(4, 8, 8, 123), sample_sketch(4, 8, 8, 123)
    for path in first.nodes:
        for g, h in zip(first.nodes[path], second.nodes[path]):
            assert_array_equal(g, h)
    assert_array_equal(first.non_negative(a), second.non_negative(a))
    assert not np.array_equal(first.nodes[()][0], sample_sketch(4, 8, 8, 124).nodes[()][0])


def test_degree_one_returns_input(rng):
    a = rng.standard_normal((4, 3))
    assert_array_equal(apply_with_negativity(a, sample_sketch(3, 8, 2, 0)), a)


def test_degree_two_single_row():
    tree = sample_sketch(1, 6, 4, 9)
    g1, g2 = tree.nodes[()]
    assert_allclose(tree.with_negativity([[1.0]]), np.sqrt(1 / 6) * g1 * g2, rtol=1e-15)


def test_dimension_mismatch():
    with pytest.raises(ShapeError):
        sample_sketch(3, 4, 4, 0).with_negativity(np.ones((2, 4)))


def test_degree_two_map_is_exact(rng):
    tree = sample_sketch(8, 4, 2, 1)
    q, k = rng.standard_normal((100, 8)), rng.standard_normal((100, 8))
    dots = np.sum(apply_non_negative(q, tree) * apply_non_negative(k, tree), axis=1)
    assert_allclose(dots, np.sum(q * k, axis=1) ** 2, rtol=1e-10, atol=1e-10)
    assert amm_relative_error(q[:16], k[:16], tree, 2) <= 1e-10


def test_zero_row_gives_zero_features(rng):
    a = rng.standard_normal((3, 4))
    a[1] = 0.0
    features = apply_non_negative(a, sample_sketch(4, 5, 8, 2))
    assert features.shape == (3, 25)
    assert not np.any(features[1])


@pytest.mark.parametrize("p", [4, 8])
def test_non_negativity(p):
    for seed in range(20):
        tree = sample_sketch(16, 16, p, seed)
        q = random_matrix(64, 16, seed, path=(0,))
        k = random_matrix(64, 16, seed, path=(1,))
        left, right = tree.with_negativity(q), tree.with_negativity(k)
        assert np.all(np.square(left @ right.T) >= 0.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error", NegativeFeatureDotWarning)
            gram = clamped_feature_gram(tree.non_negative(q), tree.non_negative(k))
        assert np.all(gram >= 0.0)


def test_clamp_reports_large_negative_dots():
    with pytest.warns(NegativeFeatureDotWarning):
        gram = clamped_feature_gram([[1.0, 0.0]], [[-1.0, 0.0]])
    assert_array_equal(gram, [[0.0]])


def test_clamp_is_silent_for_cancellation():
    with warnings.catch_warnings():
        warnings.simplefilter("error", NegativeFeatureDotWarning)
        gram = clamped_feature_gram([[1.0, 2e-9]], [[1e-9, -1.0]])
    assert_array_equal(gram, [[0.0]])


def test_unbiasedness():
    a = np.array([pair[0] for pair in UNBIASEDNESS_PAIRS])
    b = np.array([pair[1] for pair in UNBIASEDNESS_PAIRS])
    rows = np.vstack([a, b])
    trials = 10_000
    samples = np.empty((trials, len(a)))
    for trial in range(trials):
        sketched = sample_sketch(2, 4, 4, derive_seed(77, (trial,))).with_negativity(rows)
        samples[trial] = np.sum(sketched[: len(a)] * sketched[len(a) :], axis=1)
    standard_error = samples.std(axis=0, ddof=1) / np.sqrt(trials)
    assert np.all(np.abs(samples.mean(axis=0) - np.sum(a * b, axis=1) ** 2) <= 3 * standard_error)


def test_amm_error_scaling():
    medians = {}
    for r in AMM_MEDIAN_LIMITS:
        errors = []
        for trial in range(30):
            q = random_matrix(32, 8, 5, dist="unit-rows", path=(trial, 0))
            k = random_matrix(32, 8, 5, dist="unit-rows", path=(trial, 1))
            errors.append(amm_relative_error(q, k, sample_sketch(8, r, 4, derive_seed(5, (r, trial))), 4))
        medians[r] = np.median(errors)
        assert medians[r] <= AMM_MEDIAN_LIMITS[r]
    assert medians[4] >= medians[16] >= medians[64]
    assert medians[64] <= 0.6 * medians[4]


def test_amm_edge_cases():
    tree = sample_sketch(4, 8, 4, 0)
    assert amm_relative_error(np.zeros((3, 4)), np.zeros((3, 4)), tree, 4) == 0.0
    with pytest.raises(DegreeError):
        amm_relative_error(np.ones((3, 4)), np.ones((3, 4)), tree, 8)
    with pytest.raises(CapExceededError):
        amm_relative_error(np.ones((513, 4)), np.ones((3, 4)), tree, 4)
    with pytest.raises(CapExceededError):
        amm_relative_error(np.ones((3, 17)), np.ones((3, 17)), sample_sketch(17, 8, 4, 0), 4)


@pytest.mark.parametrize("p", [4, 8, 16])
def test_operation_counts(p):
    q = p // 2
    tree = sample_sketch(6, 4, p, 0)
    with counters.count_operations() as counts:
        tree.non_negative(np.ones((5, 6)))
    assert counts[counters.MATMUL_H_R] == q
    assert counts[counters.MATMUL_R_R] == q - 2
    assert counts[counters.HADAMARD] == q - 1
    assert counts[counters.SELF_TENSOR] == 1


def test_counters_are_scoped():
    tree = sample_sketch(2, 2, 4, 0)
    tree.non_negative(np.ones((1, 2)))
    with counters.count_operations() as outer:
        tree.non_negative(np.ones((1, 2)))
        with counters.count_operations() as inner:
            tree.non_negative(np.ones((1, 2)))
    assert outer[counters.SELF_TENSOR] == 2
    assert inner[counters.SELF_TENSOR] == 1


def test_save_load(tmp_path, rng):
    tree = sample_sketch(5, 3, 8, 42)
    first, second = tmp_path / "a.pskc", tmp_path / "b.pskc"
    save_sketch(first, tree)
    loaded = load_sketch(first)
    assert (loaded.degree_q, loaded.input_dim, loaded.sketch_size, loaded.seed) == (4, 5, 3, 42)
    a = rng.standard_normal((4, 5))
    assert_array_equal(loaded.non_negative(a), tree.non_negative(a))
    save_sketch(second, loaded)
    assert first.read_bytes() == second.read_bytes()


def test_load_rejects_bad_manifests(tmp_path):
    filename = tmp_path / "tree.pskc"
    save_sketch(filename, sample_sketch(5, 3, 8, 42))
    manifest, blobs = read_container(filename)

    write_container(filename, dict(manifest, kind="learnable_sketch"), blobs)
    with pytest.raises(PSKMParseError):
        load_sketch(filename)

    write_container(filename, dict(manifest, degree_q=3), blobs)
    with pytest.raises(PSKMParseError):
        load_sketch(filename)

    blobs["node[0]/G1"] = np.ones((2, 2))
    write_container(filename, manifest, blobs)
    with pytest.raises(PSKMParseError, match="shape"):
        load_sketch(filename)


def test_load_truncated(tmp_path):
    filename = tmp_path / "tree.pskc"
    save_sketch(filename, sample_sketch(5, 3, 4, 1))
    filename.write_bytes(filename.read_bytes()[:-8])
    with pytest.raises(PSKMParseError):
        load_sketch(filename)
