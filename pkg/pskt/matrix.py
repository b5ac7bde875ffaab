# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Dense linear-algebra substrate.

A matrix is a two-dimensional ``np.ndarray`` stored in single or double precision. Every
routine here is a pure function of its inputs: operands are never written to, and all
reductions are accumulated in double precision before the result is cast back to the
storage precision of the first operand.
"""
import numpy as np

from pskt.exceptions import DegreeError, PrecisionError, ShapeError
from pskt.utils import Precision

LAYER_NORM_EPS = 1e-6


def as_matrix(data, precision=None, check_finite=False):
    """Convert ``data`` to a matrix.

    Parameters
    ----------
    data : array_like
        Two-dimensional data.
    precision : Precision or str, optional
        Storage precision. If not given, float32 input stays float32 and everything else becomes float64.
    check_finite : bool
        Reject NaN and Inf entries. Used for matrices read from file or produced by a generator.

    Returns
    -------
    np.ndarray
    """
    if precision is None:
        array = np.asarray(data)
        dtype = np.float32 if array.dtype == np.float32 else np.float64
    else:
        dtype = Precision(precision).dtype if not isinstance(precision, Precision) else precision.dtype
    array = np.asarray(data, dtype=dtype)
    if array.ndim != 2:
        raise ShapeError(f"A matrix must be two-dimensional. Got shape {array.shape}.")
    if check_finite and not np.all(np.isfinite(array)):
        raise ValueError("Matrix contains NaN or Inf entries.")
    return array


def precision_of(matrix):
    return Precision.from_dtype(matrix.dtype)


def check_operands(*matrices):
    matrices = [as_matrix(_) for _ in matrices]
    dtypes = {_.dtype for _ in matrices}
    if len(dtypes) != 1:
        raise PrecisionError(f"Operands must share one precision. Got {sorted(str(_) for _ in dtypes)}.")
    return matrices


def _f64(matrix):
    return np.asarray(matrix, dtype=np.float64)


def matmul(a, b):
    """Standard matrix product ``a @ b``."""
    a, b = check_operands(a, b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"Cannot multiply {a.shape} by {b.shape}: inner dimensions differ.")
    return (_f64(a) @ _f64(b)).astype(a.dtype)


def hadamard(a, b):
    """Entrywise product."""
    a, b = check_operands(a, b)
    if a.shape != b.shape:
        raise ShapeError(f"Entrywise product needs identical shapes. Got {a.shape} and {b.shape}.")
    return (_f64(a) * _f64(b)).astype(a.dtype)


def row_self_tensor(a):
    """Replace each row ``x`` by ``x ⊗ x`` in lexicographic (Kronecker) order.

    Entry ``i * m + j`` of an output row is ``x[i] * x[j]``.
    """
    a = as_matrix(a)
    n, m = a.shape
    a64 = _f64(a)
    return np.einsum("ni,nj->nij", a64, a64).reshape(n, m * m).astype(a.dtype)


def _check_even_degree(p):
    if int(p) != p or p < 2 or p % 2:
        raise DegreeError(f"Degree must be a positive even integer. Got {p}.")
    return int(p)


def power_by_squaring(values, p):
    """Raise an array to the even power ``p`` by repeated squaring (``p = 4`` is two squarings)."""
    p = _check_even_degree(p)
    base = np.square(_f64(values))
    exponent = p // 2
    result = None
    while exponent:
        if exponent & 1:
            result = base if result is None else result * base
        exponent >>= 1
        if exponent:
            base = base * base
    return result


def entrywise_pow(m, p):
    """Raise each entry to the even power ``p``; the result is entrywise non-negative."""
    m = as_matrix(m)
    return power_by_squaring(m, p).astype(m.dtype)


def lt_mask(m):
    """Keep the lower-triangular part including the diagonal and zero the rest."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"lt needs a square matrix. Got {m.shape}.")
    return np.tril(m)


def frobenius_norm(m):
    """Frobenius norm, accumulated in double precision."""
    m = _f64(as_matrix(m))
    return float(np.sqrt(np.sum(m * m)))


def relative_error(approx, exact):
    """``‖approx − exact‖_F / ‖exact‖_F``; zero when both are zero."""
    diff = frobenius_norm(_f64(approx) - _f64(exact))
    scale = frobenius_norm(exact)
    if scale == 0.0:
        return 0.0 if diff == 0.0 else float("inf")
    return diff / scale


def layer_norm_rows(m, gain=None, bias=None, normalize_variance=True):
    """Row-wise layer normalization.

    Each row is centered to mean zero and, if ``normalize_variance`` is set, divided by
    ``max(std, 1e-6)`` with ``std`` the population standard deviation of the centered row.
    The result is scaled by ``gain`` and shifted by ``bias`` entrywise.
    """
    m = as_matrix(m)
    h = m.shape[1]
    if h < 1:
        raise ShapeError("Layer normalization needs at least one column.")
    gain = np.ones(h) if gain is None else np.asarray(gain, dtype=np.float64).reshape(-1)
    bias = np.zeros(h) if bias is None else np.asarray(bias, dtype=np.float64).reshape(-1)
    if gain.shape != (h,) or bias.shape != (h,):
        raise ShapeError(f"gain and bias must have length {h}. Got {gain.shape} and {bias.shape}.")

    x = _f64(m)
    centered = x - x.mean(axis=1, keepdims=True)
    if normalize_variance:
        std = np.sqrt(np.mean(centered * centered, axis=1, keepdims=True))
        centered = centered / np.maximum(std, LAYER_NORM_EPS)
    return (gain * centered + bias).astype(m.dtype)


def stable_softmax_rows(m, beta):
    """Row-wise softmax of ``m / beta`` with the row maximum subtracted before exponentiation."""
    if not beta > 0:
        raise ValueError(f"beta must be positive. Got {beta}.")
    m = as_matrix(m)
    logits = _f64(m) / beta
    logits = logits - logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    return (weights / weights.sum(axis=1, keepdims=True)).astype(m.dtype)

