# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Recursive Gaussian polynomial sketches.

A sketch of degree ``q`` (a power of two) maps rows of ``A`` (``n x h``) to ``n x r``:

* ``q = 1`` returns ``A`` itself;
* otherwise ``M1`` and ``M2`` are two independent degree ``q/2`` sketches of ``A`` and the
  result is ``sqrt(1/r) * (M1 @ G1) * (M2 @ G2)`` with fresh Gaussian ``G1, G2``.

Self-tensoring the degree-``q`` output gives the non-negative feature map of degree
``p = 2q``, whose pairwise dot products are squares and therefore never negative.
"""
import logging
import warnings
from typing import List, Literal

import numpy as np
import pydantic

from pskt import counters
from pskt.exceptions import CapExceededError, DegreeError, NegativeFeatureDotWarning, PSKMParseError, ShapeError
from pskt.matrix import as_matrix, power_by_squaring, row_self_tensor
from pskt.pskm_io import MANIFEST_OFFSET, read_container, write_container
from pskt.rng import RngSpec, check_seed, gaussian_matrix
from pskt.utils import AMM_MAX_H, AMM_MAX_N, SUPPORTED_DEGREES

# Relative magnitude below which a negative feature dot product is floating-point cancellation.
NEGATIVITY_TOLERANCE = 1e-6


def check_degree(p):
    """Validate a target degree ``p`` and return ``q = p / 2``."""
    if p not in SUPPORTED_DEGREES:
        raise DegreeError(f"Degree p must be one of {SUPPORTED_DEGREES}. Got {p}.")
    return int(p) // 2


def node_paths(degree_q):
    """Paths of the internal recursion nodes in pre-order, as ``(path, degree)`` pairs.

    The root has path ``()``. The sub-recursion producing ``M1`` appends 0, the one producing
    ``M2`` appends 1.
    """
    paths = []

    def _visit(path, degree):
        if degree == 1:
            return
        paths.append((path, degree))
        _visit(path + (0,), degree // 2)
        _visit(path + (1,), degree // 2)

    _visit((), degree_q)
    return paths


def path_to_str(path):
    return "".join(str(_) for _ in path)


def projection_shape(h, r, degree):
    """Shape of G1, G2 at a node of the given degree: h x r next to the leaves, r x r above."""
    return (h if degree == 2 else r), r


def stream_key(path, index):
    """Spawn key of the stream of ``G1`` (index 0) or ``G2`` (index 1) at a node.

    The depth prefix keeps keys of different nodes distinct.
    """
    return (len(path),) + tuple(path) + (index,)


class FeatureMap:
    """Common interface of the random and the learnable polynomial sketches.

    Subclasses define ``degree_q``, ``input_dim``, ``sketch_size`` and :meth:`with_negativity`.
    """

    degree_q: int
    input_dim: int
    sketch_size: int

    @property
    def degree(self):
        """Degree ``p = 2q`` of the non-negative map."""
        return 2 * self.degree_q

    @property
    def feature_dim(self):
        if self.degree_q == 1:
            return self.input_dim**2
        return self.sketch_size**2

    def check_input(self, a):
        a = as_matrix(a)
        if a.shape[1] != self.input_dim:
            raise ShapeError(f"Feature map expects {self.input_dim} columns. Got {a.shape[1]}.")
        return a

    def with_negativity(self, a):
        raise NotImplementedError

    def non_negative(self, a):
        """Self-tensored map ``φ′(A)``."""
        features = row_self_tensor(self.with_negativity(a))
        counters.record(counters.SELF_TENSOR)
        return features


class SketchTree(FeatureMap):
    def __init__(self, degree_q, input_dim, sketch_size, seed, nodes):
        """
        Materialized Gaussian projections of a recursive sketch.

        Parameters
        ----------
        degree_q : int
            Degree of the signed sketch, a power of two.
        input_dim : int
            Number of columns ``h`` of the sketched matrices.
        sketch_size : int
            Output dimension ``r``.
        seed : int
            Seed all matrices were derived from.
        nodes : dict
            Maps node path to the pair ``(G1, G2)``.
        """
        self.degree_q = degree_q
        self.input_dim = input_dim
        self.sketch_size = sketch_size
        self.seed = seed
        self.nodes = nodes
        for pair in self.nodes.values():
            for matrix in pair:
                matrix.setflags(write=False)

    @property
    def rng(self):
        return RngSpec(seed=self.seed)

    @property
    def gaussian_count(self):
        return 2 * len(self.nodes)

    def with_negativity(self, a):
        """Signed degree-``q`` sketch of each row of ``a``."""
        a = self.check_input(a)
        if self.degree_q == 1:
            return a
        return self._recurse((), self.degree_q, np.asarray(a, dtype=np.float64)).astype(a.dtype)

    def _recurse(self, path, degree, a):
        if degree == 1:
            return a
        m1 = self._recurse(path + (0,), degree // 2, a)
        m2 = self._recurse(path + (1,), degree // 2, a)
        g1, g2 = self.nodes[path]

        kind = counters.MATMUL_H_R if degree == 2 else counters.MATMUL_R_R
        counters.record(kind, 2)
        counters.record(counters.HADAMARD)
        return np.sqrt(1.0 / self.sketch_size) * ((m1 @ g1) * (m2 @ g2))

    def __repr__(self):
        return (
            f"SketchTree(degree_q={self.degree_q}, input_dim={self.input_dim}, sketch_size={self.sketch_size}, "
            f"seed={self.seed}, gaussian_count={self.gaussian_count})"
        )


def sample_sketch(h, r, p, seed):
    """Sample the Gaussian projections of the degree-``p`` non-negative sketch.

    Arguments
    ---------
    h : int
        Input dimension.
    r : int
        Sketch size.
    p : int
        Target degree, one of 2, 4, 8, 16.
    seed : int
        Unsigned 64-bit seed. Identical ``(h, r, p, seed)`` regenerate identical matrices.

    Returns
    -------
    SketchTree
    """
    degree_q = check_degree(p)
    if r < 1:
        raise ValueError(f"Sketch size must be at least 1. Got {r}.")
    if h < 1:
        raise ValueError(f"Input dimension must be at least 1. Got {h}.")
    seed = check_seed(seed)

    nodes = {}
    for path, degree in node_paths(degree_q):
        nodes[path] = (
            gaussian_matrix(seed, stream_key(path, 0), *projection_shape(h, r, degree)),
            gaussian_matrix(seed, stream_key(path, 1), *projection_shape(h, r, degree)),
        )
    tree = SketchTree(degree_q=degree_q, input_dim=h, sketch_size=r, seed=seed, nodes=nodes)
    logging.debug(f"Sampled {tree}.")
    return tree


def apply_with_negativity(a, tree):
    return tree.with_negativity(a)


def apply_non_negative(a, tree):
    return tree.non_negative(a)


def clamped_feature_gram(phi_q, phi_k):
    """``φ′(Q) φ′(K)ᵀ`` with cancellation-level negative entries clamped to zero.

    Entries more negative than ``1e-6 * ‖φ′(q)‖ ‖φ′(k)‖`` are reported with a
    :class:`NegativeFeatureDotWarning` before they are clamped as well.
    """
    phi_q = np.asarray(phi_q, dtype=np.float64)
    phi_k = np.asarray(phi_k, dtype=np.float64)
    gram = phi_q @ phi_k.T
    if np.any(gram < 0):
        scale = np.outer(np.linalg.norm(phi_q, axis=1), np.linalg.norm(phi_k, axis=1))
        worst = np.max(-gram / np.where(scale > 0, scale, 1.0))
        if worst > NEGATIVITY_TOLERANCE:
            warnings.warn(
                f"Feature dot product negative beyond cancellation: relative magnitude {worst:.3e}.",
                NegativeFeatureDotWarning,
            )
    return np.maximum(gram, 0.0)


def amm_relative_error(q, k, tree, p):
    """Relative AMM error of the non-negative sketch against the exact degree-``p`` product.

    ``‖φ′(Q)φ′(K)ᵀ − (QKᵀ)^p‖_F / (‖Q^{⊗p}‖_F ‖K^{⊗p}‖_F)``. The sketched product is formed as
    ``(L Rᵀ)^2`` with ``L, R`` the signed sketches, which equals ``φ′(Q)φ′(K)ᵀ``. Both zero
    inputs give 0.
    """
    if p != tree.degree:
        raise DegreeError(f"p = {p} is inconsistent with a feature map of degree {tree.degree}.")
    q = tree.check_input(q)
    k = tree.check_input(k)
    n = max(q.shape[0], k.shape[0])
    if n > AMM_MAX_N or q.shape[1] > AMM_MAX_H:
        raise CapExceededError(
            f"AMM error materializes the exact product; n <= {AMM_MAX_N} and h <= {AMM_MAX_H} required. "
            f"Got n = {n}, h = {q.shape[1]}."
        )

    q64 = np.asarray(q, dtype=np.float64)
    k64 = np.asarray(k, dtype=np.float64)
    exact = power_by_squaring(q64 @ k64.T, p)
    left = np.asarray(tree.with_negativity(q64), dtype=np.float64)
    right = np.asarray(tree.with_negativity(k64), dtype=np.float64)
    approx = np.square(left @ right.T)

    # ‖x^{⊗p}‖ = ‖x‖^p
    q_scale = np.sqrt(np.sum(np.sum(q64 * q64, axis=1) ** p))
    k_scale = np.sqrt(np.sum(np.sum(k64 * k64, axis=1) ** p))
    denominator = q_scale * k_scale
    if denominator == 0.0:
        return 0.0
    return float(np.linalg.norm(approx - exact) / denominator)


class SketchManifest(pydantic.BaseModel):
    kind: Literal["sketch_tree"]
    degree_q: int = pydantic.Field(ge=1)
    input_dim: int = pydantic.Field(ge=1)
    sketch_size: int = pydantic.Field(ge=1)
    seed: int = pydantic.Field(ge=0, le=2**64 - 1)
    nodes: List[str]
    blobs: List[str]


def _blob_name(path, index):
    return f"node[{path_to_str(path)}]/G{index + 1}"


def save_sketch(filename, tree):
    """Write a sketch tree to a PSKC container (one PSKM blob per matrix plus a JSON manifest)."""
    blobs = {}
    for path, _ in node_paths(tree.degree_q):
        for index, matrix in enumerate(tree.nodes[path]):
            blobs[_blob_name(path, index)] = matrix
    manifest = {
        "kind": "sketch_tree",
        "degree_q": tree.degree_q,
        "input_dim": tree.input_dim,
        "sketch_size": tree.sketch_size,
        "seed": tree.seed,
        "nodes": [path_to_str(path) for path, _ in node_paths(tree.degree_q)],
    }
    write_container(filename, manifest, blobs)


def load_sketch(filename):
    raw_manifest, blobs = read_container(filename)
    try:
        manifest = SketchManifest.model_validate(raw_manifest)
    except pydantic.ValidationError as e:
        raise PSKMParseError(f"Invalid sketch manifest: {e}", MANIFEST_OFFSET)
    try:
        check_degree(2 * manifest.degree_q)
    except DegreeError as e:
        raise PSKMParseError(str(e), MANIFEST_OFFSET)

    expected_paths = node_paths(manifest.degree_q)
    if manifest.nodes != [path_to_str(path) for path, _ in expected_paths]:
        raise PSKMParseError("Manifest node list does not match the recursion tree", MANIFEST_OFFSET)

    nodes = {}
    for path, degree in expected_paths:
        pair = []
        for index in range(2):
            name = _blob_name(path, index)
            if name not in blobs:
                raise PSKMParseError(f"Missing blob {name}", MANIFEST_OFFSET)
            matrix = np.asarray(blobs[name], dtype=np.float64)
            expected = projection_shape(manifest.input_dim, manifest.sketch_size, degree)
            if matrix.shape != expected:
                raise PSKMParseError(f"Blob {name} has shape {matrix.shape}, expected {expected}", MANIFEST_OFFSET)
            pair.append(matrix)
        nodes[path] = tuple(pair)
    return SketchTree(
        degree_q=manifest.degree_q,
        input_dim=manifest.input_dim,
        sketch_size=manifest.sketch_size,
        seed=manifest.seed,
        nodes=nodes,
    )
