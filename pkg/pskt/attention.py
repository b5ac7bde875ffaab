# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Non-causal attention: softmax reference, polynomial attention and its sketched form.

Queries and keys are taken as already layer-normalized; callers apply
:func:`pskt.matrix.layer_norm_rows` first when they need it.
"""
import logging
import math
import warnings
from typing import NamedTuple, Optional

import numpy as np

from pskt.exceptions import CapExceededError, DegreeError, PreconditionError, ShapeError, ZeroDenominatorWarning
from pskt.matrix import check_operands, power_by_squaring, stable_softmax_rows
from pskt.sketch import clamped_feature_gram
from pskt.utils import NAIVE_MAX_N, SUPPORTED_DEGREES, Precision

MEAN_ZERO_TOLERANCE = 1e-9


class AttentionConfig(NamedTuple):
    degree: int = 4
    beta: Optional[float] = None
    alpha: float = 0.0
    sketch_size: int = 32
    block_size: int = 256
    local_exact: bool = False
    precision: str = "f64"

    def validate(self):
        if self.degree not in SUPPORTED_DEGREES:
            raise DegreeError(f"Degree must be one of {SUPPORTED_DEGREES}. Got {self.degree}.")
        if self.beta is not None and not self.beta > 0:
            raise ValueError(f"beta must be positive. Got {self.beta}.")
        if self.sketch_size < 1:
            raise ValueError(f"Sketch size must be at least 1. Got {self.sketch_size}.")
        if self.block_size < 1:
            raise ValueError(f"Block size must be at least 1. Got {self.block_size}.")
        Precision(self.precision)
        return self

    def resolved_beta(self, h):
        """``beta``, defaulting to ``sqrt(h)``."""
        return math.sqrt(h) if self.beta is None else self.beta


def check_qkv(q, k, v):
    q, k, v = check_operands(q, k, v)
    if q.shape[1] != k.shape[1]:
        raise ShapeError(f"Queries and keys need the same width. Got {q.shape} and {k.shape}.")
    if k.shape[0] != v.shape[0]:
        raise ShapeError(f"Keys and values need the same number of rows. Got {k.shape} and {v.shape}.")
    return q, k, v


def _f64(matrix):
    return np.asarray(matrix, dtype=np.float64)


def softmax_attention(q, k, v, beta=None):
    """``softmax(QKᵀ / beta) V`` with row-max stabilization; ``beta`` defaults to ``sqrt(h)``."""
    q, k, v = check_qkv(q, k, v)
    beta = math.sqrt(q.shape[1]) if beta is None else beta
    weights = stable_softmax_rows(_f64(q) @ _f64(k).T, beta)
    return (weights @ _f64(v)).astype(q.dtype)


def raw_polynomial_weights(q, k, alpha, beta, p):
    """Weights ``((⟨q_i, k_j⟩ + alpha) / beta)^p`` normalized to sum to one per row.

    No guard is added to the normalizer. A row whose normalizer is exactly zero is returned
    as a zero row and reported with a :class:`ZeroDenominatorWarning`.
    """
    q, k = check_operands(q, k)
    if q.shape[1] != k.shape[1]:
        raise ShapeError(f"Queries and keys need the same width. Got {q.shape} and {k.shape}.")
    if not beta > 0:
        raise ValueError(f"beta must be positive. Got {beta}.")
    numerator = power_by_squaring((_f64(q) @ _f64(k).T + alpha) / beta, p)
    denominator = numerator.sum(axis=1, keepdims=True)

    zero_rows = np.flatnonzero(denominator[:, 0] == 0.0)
    if zero_rows.size:
        warnings.warn(
            f"Raw polynomial weights have a zero normalizer in rows {zero_rows.tolist()}; returning zero rows.",
            ZeroDenominatorWarning,
        )
    safe = np.where(denominator == 0.0, 1.0, denominator)
    weights = np.where(denominator == 0.0, 0.0, numerator / safe)
    return weights.astype(q.dtype)


def exact_poly_weights(q, k, p, guard=True):
    """Polynomial weights ``⟨q_i, k_j⟩^p / (1 + Σ_j' ⟨q_i, k_j'⟩^p)``.

    With ``guard=False`` the leading 1 is dropped from the normalizer.
    """
    q, k = check_operands(q, k)
    numerator = power_by_squaring(_f64(q) @ _f64(k).T, p)
    denominator = numerator.sum(axis=1, keepdims=True) + (1.0 if guard else 0.0)
    return (numerator / denominator).astype(q.dtype)


def exact_poly_attention(q, k, v, p):
    """Degree-``p`` polynomial attention ``D⁻¹ (QKᵀ)^p V`` with ``D = diag(1 + (QKᵀ)^p 1)``."""
    q, k, v = check_qkv(q, k, v)
    weights = power_by_squaring(_f64(q) @ _f64(k).T, p)
    denominator = 1.0 + weights.sum(axis=1, keepdims=True)
    return ((weights @ _f64(v)) / denominator).astype(q.dtype)


def polysketch_attention(q, k, v, feature_map):
    """Sketched polynomial attention in time linear in the number of rows.

    Computes ``D̃⁻¹ φ′(Q) φ′(K)ᵀ V`` by first summarizing the keys as ``φ′(K)ᵀ V`` and
    ``φ′(K)ᵀ 1`` and then multiplying by ``φ′(Q)``; the ``n x n`` matrix is never formed.
    The query mass ``⟨φ′(q_i), φ′(K)ᵀ 1⟩`` is clamped at zero, so every normalizer is at least one.
    """
    q, k, v = check_qkv(q, k, v)
    phi_q = _f64(feature_map.non_negative(q))
    phi_k = _f64(feature_map.non_negative(k))

    kv = phi_k.T @ _f64(v)
    key_mass = phi_k.sum(axis=0)
    numerator = phi_q @ kv
    denominator = 1.0 + np.maximum(phi_q @ key_mass, 0.0)
    return (numerator / denominator[:, None]).astype(q.dtype)


def naive_polysketch_attention(q, k, v, feature_map):
    """Materialized ``D̃⁻¹ φ′(Q) φ′(K)ᵀ V``, the oracle of :func:`polysketch_attention`."""
    q, k, v = check_qkv(q, k, v)
    if max(q.shape[0], k.shape[0]) > NAIVE_MAX_N:
        raise CapExceededError(f"Naive attention is capped at n = {NAIVE_MAX_N}. Got {max(q.shape[0], k.shape[0])}.")
    weights = clamped_feature_gram(feature_map.non_negative(q), feature_map.non_negative(k))
    denominator = 1.0 + weights.sum(axis=1, keepdims=True)
    return ((weights @ _f64(v)) / denominator).astype(q.dtype)


def absorption_transform(q, k, alpha, beta):
    """Absorb bias ``alpha`` and scale ``beta`` into mean-zero queries and keys.

    Returns ``(Q′, K′)`` with ``x′ = x / sqrt(beta) + sqrt(alpha / (beta h)) 1_h`` so that
    ``(⟨q_i, k_j⟩ + alpha) / beta = ⟨q′_i, k′_j⟩``.
    """
    q, k = check_operands(q, k)
    if q.shape[1] != k.shape[1]:
        raise ShapeError(f"Queries and keys need the same width. Got {q.shape} and {k.shape}.")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative. Got {alpha}.")
    if not beta > 0:
        raise ValueError(f"beta must be positive. Got {beta}.")
    for name, matrix in (("Q", q), ("K", k)):
        worst = float(np.max(np.abs(_f64(matrix).mean(axis=1)), initial=0.0))
        if worst > MEAN_ZERO_TOLERANCE:
            raise PreconditionError(f"Rows of {name} must have mean zero; largest |mean| is {worst:.3e}.")

    h = q.shape[1]
    shift = math.sqrt(alpha / (beta * h))
    scale = 1.0 / math.sqrt(beta)
    logging.debug(f"Absorbing alpha={alpha}, beta={beta}: scale {scale}, shift {shift}.")
    return (_f64(q) * scale + shift).astype(q.dtype), (_f64(k) * scale + shift).astype(k.dtype)
