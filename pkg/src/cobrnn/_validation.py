"""Input validation helpers used by the estimators and functional API."""

import numbers

import numpy as np

from .exceptions import NumericError, UsageError


def check_finite(a, name="input"):
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{name} contains non-finite values")
    return a


def check_matrix(a, name="input", ndim=2):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != ndim:
        raise UsageError(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    return check_finite(a, name)


def check_images(X, name="X"):
    """(n, H, W) float array; a single (H, W) patch is promoted."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise UsageError(f"{name} must have shape (n_samples, height, width), got {X.shape}")
    return check_finite(X, name)


def check_sequences(X, input_dim=None, name="X"):
    """(n, T, k) float array of sequences."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] < 1:
        raise UsageError(f"{name} must have shape (n_samples, seq_len, input_dim), got {X.shape}")
    if input_dim is not None and X.shape[2] != input_dim:
        raise UsageError(f"{name} has input width {X.shape[2]}, expected {input_dim}")
    return check_finite(X, name)


def check_labels(y, n_classes=None, n_samples=None, name="y"):
    y = np.asarray(y)
    if y.ndim != 1:
        raise UsageError(f"{name} must be 1-dimensional")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise UsageError(f"{name} must hold integer class indices")
    y = y.astype(np.intp)
    if n_samples is not None and y.shape[0] != n_samples:
        raise UsageError(f"{name} has {y.shape[0]} entries, expected {n_samples}")
    if y.size and y.min() < 0:
        raise UsageError(f"{name} holds negative labels")
    if n_classes is not None and y.size and y.max() >= n_classes:
        raise UsageError(f"{name} holds label {int(y.max())} >= n_classes={n_classes}")
    return y


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise UsageError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise UsageError(f"{name} must be a positive real, got {value!r}")
    return float(value)
