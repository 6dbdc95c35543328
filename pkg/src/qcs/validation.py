"""Input validation helpers.

Thin wrappers around ``np.asarray`` that pin dtype to float64, check
finiteness and enforce expected shapes.  All public entry points route
their array arguments through these so that error messages name the
offending argument instead of failing deep inside numpy.
"""

from __future__ import annotations

import numpy as np


def as_float_array(x, name: str = "array") -> np.ndarray:
    """Convert to a float64 ndarray, rejecting NaN/inf entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_vector(x, name: str = "vector", length: int | None = None) -> np.ndarray:
    arr = as_float_array(x, name)
    arr = arr.reshape(-1) if arr.ndim != 1 else arr
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    return arr


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    arr = as_float_array(x, name)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def check_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a nonnegative finite number, got {value}")
    return value
