"""Dense matrix kernels used by the model and trainer.

Matrices are plain row-major float64 numpy arrays. The heavy products are
delegated to numpy/scipy; everything here adds the shape checking and the
exact semantics (masking, clamping, initialization law) the rest of the
package relies on.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import Rng
from .sparse import CsrMatrix

Matrix = np.ndarray


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> Matrix:
    """Coerce to a contiguous float64 2-D array, optionally checking shape."""
    m = np.ascontiguousarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if rows is not None and m.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ValueError(f"expected {cols} columns, got {m.shape[1]}")
    return m


def assert_finite(m: Matrix, context: str = "matrix") -> None:
    if not np.all(np.isfinite(m)):
        raise FloatingPointError(f"{context} contains non-finite entries")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Dense product a @ b with explicit inner-dimension check."""
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions disagree: {a.shape} x {b.shape}")
    return a @ b


def spmm(s: CsrMatrix, h: Matrix) -> Matrix:
    """Sparse-times-dense product s @ h."""
    if s.shape[1] != h.shape[0]:
        raise ValueError(f"inner dimensions disagree: {s.shape} x {h.shape}")
    return s.matmul_dense(h)


def softmax_rows(z: Matrix) -> Matrix:
    """Row-wise softmax with per-row max subtraction for overflow safety."""
    if z.ndim != 2 or z.shape[1] < 1:
        raise ValueError("softmax_rows expects an n x C matrix with C >= 1")
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def relu(z: Matrix) -> Matrix:
    return np.maximum(z, 0.0)


def glorot_init(rng: Rng, rows: int, cols: int) -> Matrix:
    """Uniform Glorot initialization on [-a, a], a = sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ValueError("glorot_init needs positive dimensions")
    a = math.sqrt(6.0 / (rows + cols))
    return rng.uniform((rows, cols), -a, a)


def dropout_mask(rng: Rng, shape: tuple[int, int], rate: float) -> Matrix:
    """Inverted-scaling dropout mask: kept entries carry 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    keep = rng.uniform(shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)
