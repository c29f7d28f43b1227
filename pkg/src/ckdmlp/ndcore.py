"""Dense float64 matrix helpers.

A ``Matrix`` is a plain 2-D C-contiguous ``numpy.ndarray`` of float64.
The functions here validate shapes and keep the arithmetic order fixed,
so results are reproducible bit-for-bit against a naive loop.
"""
from __future__ import annotations

from typing import Callable, Literal

import numpy as np

Matrix = np.ndarray


class ShapeError(ValueError):
    """Operand shapes do not conform."""


def as_matrix(values, *, allow_nonfinite: bool = False) -> Matrix:
    """Copy ``values`` into a fresh float64 row-major matrix.

    1-D input becomes a single row. Raises ``ShapeError`` for empty or
    higher-rank input and ``ValueError`` on NaN/Inf unless allowed.
    """
    a = np.array(values, dtype=np.float64, order="C", copy=True)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got {a.ndim} dimensions")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"matrix must be at least 1x1, got {a.shape[0]}x{a.shape[1]}")
    if not allow_nonfinite and not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def zeros(rows: int, cols: int) -> Matrix:
    return np.zeros((rows, cols), dtype=np.float64)


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.float64)


def _shape(a: Matrix) -> str:
    return f"{a.shape[0]}x{a.shape[1]}"


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product accumulated in i-k-j order.

    Each output entry is ``((a[i,0]*b[0,j] + a[i,1]*b[1,j]) + ...)`` summed
    left to right over k, which is exactly what a triple loop produces.
    Only the k loop runs in Python; i and j are vectorised.
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {_shape(a)} by {_shape(b)}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float64)
    for k in range(a.shape[1]):
        out += a[:, k : k + 1] * b[k : k + 1, :]
    return out


_ELEMENTWISE = {"add": np.add, "sub": np.subtract, "mul": np.multiply}


def elementwise(a: Matrix, b: Matrix, kind: Literal["add", "sub", "mul"]) -> Matrix:
    if kind not in _ELEMENTWISE:
        raise ValueError(f"unknown elementwise kind {kind!r}")
    if a.shape != b.shape:
        raise ShapeError(f"elementwise {kind} needs equal shapes, got {_shape(a)} and {_shape(b)}")
    return _ELEMENTWISE[kind](a, b)


def add_column(a: Matrix, col: Matrix) -> Matrix:
    """Add a column vector (rows x 1) to every column of ``a``; used for biases."""
    if col.shape != (a.shape[0], 1):
        raise ShapeError(f"cannot broadcast {_shape(col)} over {_shape(a)}")
    return a + col


def map_scalar(a: Matrix, f: Callable[[float], float]) -> Matrix:
    """Apply ``f`` to every entry. Numpy ufuncs are applied directly."""
    if isinstance(f, np.ufunc):
        return np.asarray(f(a), dtype=np.float64)
    out = np.empty_like(a)
    flat_in, flat_out = a.ravel(), out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = f(float(flat_in[i]))
    return out


def transpose(a: Matrix) -> Matrix:
    return np.ascontiguousarray(a.T)
