"""Argument checks shared by the physics modules and the estimators."""

import numpy as np

from .exceptions import DomainError


def check_positive(name, value, allow_zero=False):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    bad = arr < 0 if allow_zero else arr <= 0
    if np.any(bad):
        kind = "non-negative" if allow_zero else "strictly positive"
        raise DomainError(f"{name} must be {kind}, got {value!r}")
    return value


def check_fraction(name, value):
    check_positive(name, value)
    if np.any(np.asarray(value) >= 1):
        raise DomainError(f"{name} must lie in (0, 1), got {value!r}")
    return value


def check_grid(name, values, min_length=1):
    """Return ``values`` as a strictly increasing finite 1-d float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < min_length:
        raise DomainError(f"{name} must be 1-d with at least {min_length} entries")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise DomainError(f"{name} must be strictly increasing")
    return arr
