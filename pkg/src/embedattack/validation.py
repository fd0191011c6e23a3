"""Input validation helpers used across the package, in the spirit of
sklearn's ``check_array``: normalize to numpy, fail early with package errors."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, EmptyInput, IdOutOfRange, ShapeMismatch


def as_vector(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array, optionally enforcing its length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"{name} has dim {arr.shape[0]}, expected {dim}")
    return arr


def as_matrix(x, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, optionally enforcing the column count."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if cols is not None and arr.shape[1] != cols:
        raise DimensionMismatch(f"{name} has {arr.shape[1]} columns, expected {cols}")
    return arr


def as_token_ids(ids, vocab_size: int, allow_empty: bool = True) -> np.ndarray:
    """Coerce to an int64 id array and bounds-check against the vocabulary."""
    arr = np.asarray(ids, dtype=np.int64)
    if arr.ndim != 1:
        raise ShapeMismatch(f"token ids must be 1-D, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise EmptyInput("expected at least one token id")
    if arr.size and (arr.min() < 0 or arr.max() >= vocab_size):
        bad = arr[(arr < 0) | (arr >= vocab_size)][0]
        raise IdOutOfRange(f"token id {bad} outside [0, {vocab_size})")
    return arr


def require_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.isfinite(arr).all():
        raise ShapeMismatch(f"{name} contains non-finite values")
    return arr
