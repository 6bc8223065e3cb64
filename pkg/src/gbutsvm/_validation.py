"""Input validation helpers used by the estimators and the functional core."""

from __future__ import annotations

import numpy as np

from .errors import DataFormatError


def as_float_matrix(x, name="X", allow_empty=False):
    """Coerce to a C-contiguous float64 2-D array and reject non-finite rows."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DataFormatError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if not allow_empty and arr.shape[0] == 0:
        raise DataFormatError(f"{name} has no rows")
    if arr.size and not np.all(np.isfinite(arr)):
        bad = np.where(~np.isfinite(arr).all(axis=1))[0][0]
        raise DataFormatError(f"{name} row {bad} contains non-finite values")
    return arr


def as_float_vector(x, name="v", allow_empty=False):
    arr = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    if not allow_empty and arr.size == 0:
        raise DataFormatError(f"{name} is empty")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DataFormatError(f"{name} contains non-finite values")
    return arr


def as_pm1_labels(y, name="y"):
    """Coerce labels to an int array and require every value in {+1, -1}."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise DataFormatError(f"{name} must be 1-dimensional")
    out = np.empty(arr.shape[0], dtype=np.int64)
    try:
        out[:] = arr
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"{name} is not numeric: {exc}") from None
    if arr.size and not np.all((out == 1) | (out == -1)):
        bad = sorted(set(out.tolist()) - {1, -1})
        raise DataFormatError(f"{name} must contain only +1/-1, found {bad}")
    return out


def check_same_length(a, b, name_a="a", name_b="b"):
    if len(a) != len(b):
        raise DataFormatError(
            f"{name_a} and {name_b} have different lengths ({len(a)} vs {len(b)})"
        )


def require(cond, message, exc=DataFormatError):
    if not cond:
        raise exc(message)
