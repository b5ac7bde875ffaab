# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pskt import counters
from pskt.causal import causal_polysketch_terms
from pskt.exceptions import DegreeError, PSKMParseError, ShapeError
from pskt.learnable import (
    apply_learnable_non_negative,
    apply_learnable_with_negativity,
    dense_block_forward,
    gelu,
    init_params,
    layer_shapes,
    load_params,
    save_params,
)
from pskt.pskm_io import read_container, write_container
from pskt.verify import zeroed


def test_layer_shapes():
    assert layer_shapes(64, 32) == [(64, 256), (256, 32), (32, 256), (256, 32)]


def test_parameter_counts():
    params = init_params(64, 32, 8, 0)
    assert params.network_count == 6
    assert params.nodes[(0,)][0].weight_count == 40960
    assert params.nodes[()][0].weight_count == 32768
    assert init_params(64, 32, 4, 0).parameter_count == 84352


def test_gelu():
    assert_allclose(gelu(np.array([0.0, 1.0, -1.0])), [0.0, 0.8413447460685429, -0.15865525393145707], rtol=1e-12)


def test_dense_block_shapes(rng):
    block = init_params(6, 4, 4, 1).nodes[()][0]
    assert dense_block_forward(rng.standard_normal((3, 6)), block).shape == (3, 4)
    with pytest.raises(ShapeError):
        dense_block_forward(np.ones((3, 4)), block)


def test_bad_degree():
    for p in (2, 6, 32):
        with pytest.raises(DegreeError):
            init_params(4, 4, p, 0)
    with pytest.raises(ValueError):
        init_params(4, 0, 4, 0)


def test_zero_parameters_give_zero_output(rng):
    params = zeroed(init_params(5, 4, 8, 3))
    a = rng.standard_normal((7, 5))
    assert not np.any(apply_learnable_with_negativity(a, params))
    assert not np.any(apply_learnable_non_negative(a, params))


def test_signed_outputs_are_bounded(rng):
    params = init_params(8, 8, 4, 2)
    for _ in range(20):
        out = params.with_negativity(rng.standard_normal((16, 8)) * 3.0)
        assert np.all(np.abs(out) < np.sqrt(8))


def test_features_are_non_negative(rng):
    params = init_params(8, 8, 4, 4)
    a, b = rng.standard_normal((50, 8)), rng.standard_normal((50, 8))
    features_a, features_b = params.non_negative(a), params.non_negative(b)
    assert features_a.shape == (50, 64)
    assert np.all(features_a @ features_b.T >= -1e-9)


def test_forward_is_deterministic(rng):
    a = rng.standard_normal((10, 6))
    assert_array_equal(init_params(6, 4, 8, 11).non_negative(a), init_params(6, 4, 8, 11).non_negative(a))
    assert not np.array_equal(init_params(6, 4, 8, 11).non_negative(a), init_params(6, 4, 8, 12).non_negative(a))


def test_forward_counts(rng):
    params = init_params(6, 4, 8, 0)
    with counters.count_operations() as counts:
        params.non_negative(rng.standard_normal((3, 6)))
    assert counts[counters.DENSE_BLOCK] == 6
    assert counts[counters.HADAMARD] == 3


def test_causal_run(qkv):
    q, k, v = qkv(64, 8)
    numerator, denominator = causal_polysketch_terms(q, k, v, init_params(8, 8, 4, 5), 16)
    assert np.all(np.isfinite(numerator))
    assert np.all(denominator >= 1.0)


def test_save_load(tmp_path, rng):
    params = init_params(6, 4, 8, 9)
    first, second = tmp_path / "a.pskc", tmp_path / "b.pskc"
    save_params(first, params)
    loaded = load_params(first)
    assert (loaded.degree_q, loaded.input_dim, loaded.sketch_size, loaded.seed) == (4, 6, 4, 9)
    a = rng.standard_normal((5, 6))
    assert_array_equal(loaded.with_negativity(a), params.with_negativity(a))
    save_params(second, loaded)
    assert first.read_bytes() == second.read_bytes()


def test_load_truncated(tmp_path):
    filename = tmp_path / "params.pskc"
    save_params(filename, init_params(4, 2, 4, 0))
    filename.write_bytes(filename.read_bytes()[:-3])
    with pytest.raises(PSKMParseError):
        load_params(filename)


def test_load_rejects_bad_blobs(tmp_path):
    filename = tmp_path / "params.pskc"
    save_params(filename, init_params(4, 2, 4, 0))
    manifest, blobs = read_container(filename)

    write_container(filename, dict(manifest, kind="sketch_tree"), blobs)
    with pytest.raises(PSKMParseError):
        load_params(filename)

    del blobs["node[]/f2/b3"]
    write_container(filename, manifest, blobs)
    with pytest.raises(PSKMParseError, match="Missing"):
        load_params(filename)
