# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Learnable polynomial sketches (forward pass only).

The recursion is the one of :mod:`pskt.sketch`, with each Gaussian projection ``M @ G``
replaced by a small dense network ``f(M)`` and every combine node range-limited:

    sqrt(r) * tanh(sqrt(1/r) * (f1(M1) * f2(M2)))

Each network maps ``in -> r`` (``in = h`` next to the leaves, ``r`` above) through

    LN -> linear(in, 8r) -> gelu -> LN -> linear(8r, r) -> linear(r, 8r) -> gelu -> linear(8r, r)

which has ``8 in r + 24 r^2`` weights. ``gelu`` is the exact form ``x Φ(x)`` with the
Gaussian CDF. Layer norms normalize the variance. Parameters are initialized, saved and
loaded here; training them is not part of this package.
"""
import logging
from typing import List, Literal, NamedTuple, Tuple

import numpy as np
import pydantic
from scipy.special import erf

from pskt import counters
from pskt.exceptions import DegreeError, PSKMParseError, ShapeError
from pskt.matrix import as_matrix, layer_norm_rows
from pskt.pskm_io import MANIFEST_OFFSET, read_container, write_container
from pskt.rng import check_seed, gaussian_matrix
from pskt.sketch import FeatureMap, check_degree, node_paths, path_to_str, stream_key

HIDDEN_FACTOR = 8


def gelu(x):
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def layer_shapes(in_dim, r):
    """Weight shapes of one dense block, input to output."""
    hidden = HIDDEN_FACTOR * r
    return [(in_dim, hidden), (hidden, r), (r, hidden), (hidden, r)]


class DenseBlockParams(NamedTuple):
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    norm_gains: Tuple[np.ndarray, ...]
    norm_biases: Tuple[np.ndarray, ...]

    @property
    def input_dim(self):
        return self.weights[0].shape[0]

    @property
    def sketch_size(self):
        return self.weights[-1].shape[1]

    @property
    def weight_count(self):
        return sum(_.size for _ in self.weights)

    @property
    def parameter_count(self):
        return sum(_.size for group in self for _ in group)


def check_block(params):
    shapes = layer_shapes(params.input_dim, params.sketch_size)
    if len(params.weights) != 4 or [_.shape for _ in params.weights] != shapes:
        raise ShapeError(f"Dense block weights must have shapes {shapes}.")
    if [_.shape for _ in params.biases] != [(cols,) for _, cols in shapes]:
        raise ShapeError("Dense block biases must match the output width of each layer.")
    norm_widths = [(params.input_dim,), (HIDDEN_FACTOR * params.sketch_size,)]
    if [_.shape for _ in params.norm_gains] != norm_widths or [_.shape for _ in params.norm_biases] != norm_widths:
        raise ShapeError(f"Layer norm parameters must have shapes {norm_widths}.")
    return params


def dense_block_forward(x, params):
    """Apply one dense block to the rows of ``x``."""
    x = as_matrix(x)
    if x.shape[1] != params.input_dim:
        raise ShapeError(f"Dense block expects {params.input_dim} columns. Got {x.shape[1]}.")
    w1, w2, w3, w4 = params.weights
    b1, b2, b3, b4 = params.biases

    hidden = layer_norm_rows(np.asarray(x, dtype=np.float64), params.norm_gains[0], params.norm_biases[0])
    hidden = gelu(hidden @ w1 + b1)
    hidden = layer_norm_rows(hidden, params.norm_gains[1], params.norm_biases[1])
    hidden = hidden @ w2 + b2
    hidden = gelu(hidden @ w3 + b3)
    counters.record(counters.DENSE_BLOCK)
    return (hidden @ w4 + b4).astype(x.dtype)


class LearnableSketchParams(FeatureMap):
    def __init__(self, degree_q, input_dim, sketch_size, seed, nodes):
        """
        Dense networks replacing the Gaussian projections of a recursive sketch.

        Parameters
        ----------
        degree_q : int
            Degree of the signed sketch, a power of two >= 2.
        input_dim : int
            Input dimension ``h``.
        sketch_size : int
            Output dimension ``r``.
        seed : int
            Seed used to initialize the parameters.
        nodes : dict
            Maps node path to the pair ``(f1, f2)`` of :class:`DenseBlockParams`.
        """
        self.degree_q = degree_q
        self.input_dim = input_dim
        self.sketch_size = sketch_size
        self.seed = seed
        self.nodes = nodes
        for pair in self.nodes.values():
            for block in pair:
                for group in block:
                    for array in group:
                        array.setflags(write=False)

    @property
    def network_count(self):
        return 2 * len(self.nodes)

    @property
    def parameter_count(self):
        return sum(block.parameter_count for pair in self.nodes.values() for block in pair)

    def with_negativity(self, a):
        """Signed learnable sketch; every entry lies strictly inside ``(-sqrt(r), sqrt(r))``."""
        a = self.check_input(a)
        if self.degree_q == 1:
            return a
        return self._recurse((), self.degree_q, np.asarray(a, dtype=np.float64)).astype(a.dtype)

    def _recurse(self, path, degree, a):
        if degree == 1:
            return a
        m1 = self._recurse(path + (0,), degree // 2, a)
        m2 = self._recurse(path + (1,), degree // 2, a)
        f1, f2 = self.nodes[path]
        counters.record(counters.HADAMARD)
        root_r = np.sqrt(self.sketch_size)
        return root_r * np.tanh(dense_block_forward(m1, f1) * dense_block_forward(m2, f2) / root_r)

    def __repr__(self):
        return (
            f"LearnableSketchParams(degree_q={self.degree_q}, input_dim={self.input_dim}, "
            f"sketch_size={self.sketch_size}, seed={self.seed}, network_count={self.network_count})"
        )


def apply_learnable_with_negativity(a, params):
    return params.with_negativity(a)


def apply_learnable_non_negative(a, params):
    return params.non_negative(a)


def _init_block(seed, path, index, in_dim, r):
    weights = []
    for layer, (rows, cols) in enumerate(layer_shapes(in_dim, r)):
        key = stream_key(path, index) + (layer,)
        weights.append(gaussian_matrix(seed, key, rows, cols, scale=1.0 / np.sqrt(rows)))
    biases = [np.zeros(cols) for _, cols in layer_shapes(in_dim, r)]
    widths = (in_dim, HIDDEN_FACTOR * r)
    return DenseBlockParams(
        weights=tuple(weights),
        biases=tuple(biases),
        norm_gains=tuple(np.ones(width) for width in widths),
        norm_biases=tuple(np.zeros(width) for width in widths),
    )


def init_params(h, r, p, seed):
    """Initialize learnable sketch parameters for the degree-``p`` non-negative map.

    Weights are N(0, 1/fan_in), biases zero, layer norms have gain one and bias zero.

    Arguments
    ---------
    h : int
        Input dimension.
    r : int
        Sketch size.
    p : int
        Target degree, one of 4, 8, 16 (degree 2 needs no networks).
    seed : int
        Unsigned 64-bit seed.

    Returns
    -------
    LearnableSketchParams
    """
    degree_q = check_degree(p)
    if degree_q < 2:
        raise DegreeError(f"Learnable sketches need p >= 4. Got p = {p}.")
    if r < 1 or h < 1:
        raise ValueError(f"Input dimension and sketch size must be positive. Got h = {h}, r = {r}.")
    seed = check_seed(seed)

    nodes = {}
    for path, degree in node_paths(degree_q):
        in_dim = h if degree == 2 else r
        nodes[path] = (_init_block(seed, path, 0, in_dim, r), _init_block(seed, path, 1, in_dim, r))
    params = LearnableSketchParams(degree_q=degree_q, input_dim=h, sketch_size=r, seed=seed, nodes=nodes)
    logging.debug(f"Initialized {params} with {params.parameter_count} parameters.")
    return params


class LearnableManifest(pydantic.BaseModel):
    kind: Literal["learnable_sketch"]
    degree_q: int = pydantic.Field(ge=2)
    input_dim: int = pydantic.Field(ge=1)
    sketch_size: int = pydantic.Field(ge=1)
    seed: int = pydantic.Field(ge=0, le=2**64 - 1)
    nodes: List[str]
    blobs: List[str]


def _blob_names(path, index):
    prefix = f"node[{path_to_str(path)}]/f{index + 1}"
    return {
        "weights": [f"{prefix}/W{layer + 1}" for layer in range(4)],
        "biases": [f"{prefix}/b{layer + 1}" for layer in range(4)],
        "norm_gains": [f"{prefix}/ln{idx + 1}_gain" for idx in range(2)],
        "norm_biases": [f"{prefix}/ln{idx + 1}_bias" for idx in range(2)],
    }


def save_params(filename, params):
    """Write parameters to a PSKC container; vectors are stored as ``1 x len`` matrices."""
    blobs = {}
    for path, _ in node_paths(params.degree_q):
        for index, block in enumerate(params.nodes[path]):
            for field, names in _blob_names(path, index).items():
                for name, array in zip(names, getattr(block, field)):
                    blobs[name] = np.atleast_2d(array)
    manifest = {
        "kind": "learnable_sketch",
        "degree_q": params.degree_q,
        "input_dim": params.input_dim,
        "sketch_size": params.sketch_size,
        "seed": params.seed,
        "nodes": [path_to_str(path) for path, _ in node_paths(params.degree_q)],
    }
    write_container(filename, manifest, blobs)
    logging.info(f"Wrote {len(blobs)} parameter blobs to {filename}.")


def load_params(filename):
    """Read parameters written by :func:`save_params`; nothing is returned unless all of it parses."""
    raw_manifest, blobs = read_container(filename)
    try:
        manifest = LearnableManifest.model_validate(raw_manifest)
    except pydantic.ValidationError as e:
        raise PSKMParseError(f"Invalid learnable sketch manifest: {e}", MANIFEST_OFFSET)
    try:
        check_degree(2 * manifest.degree_q)
    except DegreeError as e:
        raise PSKMParseError(str(e), MANIFEST_OFFSET)
    expected_paths = node_paths(manifest.degree_q)
    if manifest.nodes != [path_to_str(path) for path, _ in expected_paths]:
        raise PSKMParseError("Manifest node list does not match the recursion tree", MANIFEST_OFFSET)

    nodes = {}
    for path, degree in expected_paths:
        in_dim = manifest.input_dim if degree == 2 else manifest.sketch_size
        pair = []
        for index in range(2):
            fields = {}
            for field, names in _blob_names(path, index).items():
                missing = [_ for _ in names if _ not in blobs]
                if missing:
                    raise PSKMParseError(f"Missing blobs {missing}", MANIFEST_OFFSET)
                arrays = [np.asarray(blobs[name], dtype=np.float64) for name in names]
                # vectors come back as 1 x len
                fields[field] = tuple(_ if field == "weights" else _.reshape(-1) for _ in arrays)
            block = DenseBlockParams(**fields)
            try:
                check_block(block)
            except ShapeError as e:
                raise PSKMParseError(f"Node {path_to_str(path)!r} f{index + 1}: {e}", MANIFEST_OFFSET)
            if block.input_dim != in_dim or block.sketch_size != manifest.sketch_size:
                raise PSKMParseError(
                    f"Node {path_to_str(path)!r} f{index + 1} maps {block.input_dim} -> {block.sketch_size}, "
                    f"expected {in_dim} -> {manifest.sketch_size}",
                    MANIFEST_OFFSET,
                )
            pair.append(block)
        nodes[path] = tuple(pair)

    return LearnableSketchParams(
        degree_q=manifest.degree_q,
        input_dim=manifest.input_dim,
        sketch_size=manifest.sketch_size,
        seed=manifest.seed,
        nodes=nodes,
    )
