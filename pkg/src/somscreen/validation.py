"""Input validation helpers used by the estimators and the functional API."""

import numpy as np

PATCH_SIZE = 50


def as_float_array(a, name="array"):
    """Convert to a float64 ndarray and reject non-finite entries."""
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def check_feature_matrix(X, dim=None, min_samples=1, name="X"):
    """Validate a (n_samples, n_features) float matrix."""
    X = as_float_array(X, name)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] < min_samples:
        raise ValueError(f"{name} needs at least {min_samples} samples, got {X.shape[0]}")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"{name} has {X.shape[1]} features, expected {dim}")
    return X


def check_vector(x, dim=None, name="x"):
    """Validate a single 1-D float vector."""
    x = as_float_array(x, name)
    if x.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {dim}")
    return x


def check_patch(pixels, name="patch"):
    """Validate a square phase patch of PATCH_SIZE x PATCH_SIZE finite pixels."""
    arr = as_float_array(pixels, name)
    if arr.shape != (PATCH_SIZE, PATCH_SIZE):
        raise ValueError(
            f"{name} must be {PATCH_SIZE}x{PATCH_SIZE}, got shape {arr.shape}"
        )
    return arr


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return float(value)
