"""Patch conditioning: per-patch intensity normalisation and mean filtering."""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_images, check_matrix
from .exceptions import UsageError

MODES = ("none", "minmax", "zscore")


@dataclass(frozen=True)
class PreprocessConfig:
    mode: str = "minmax"
    denoise_window: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise UsageError(f"preprocess.mode must be one of {MODES}, got {self.mode!r}")
        if (isinstance(self.denoise_window, bool) or not isinstance(self.denoise_window, int)
                or self.denoise_window < 1 or self.denoise_window % 2 == 0):
            raise UsageError("preprocess.denoise_window must be an odd integer >= 1")


def _rescale(p):
    lo, hi = p.min(), p.max()
    if hi == lo:
        return np.full_like(p, 0.5)
    return (p - lo) / (hi - lo)


def normalize_patch(p, mode="minmax"):
    """Map a patch into [0, 1].

    ``minmax`` sends [min, max] affinely onto [0, 1].  ``zscore`` standardises
    the patch and then rescales its observed range onto [0, 1].  A constant
    patch becomes 0.5 everywhere under either mode.
    """
    p = check_matrix(p, "patch")
    if mode not in MODES:
        raise UsageError(f"unknown normalisation mode {mode!r}")
    if mode == "none":
        return p.copy()
    if mode == "zscore":
        std = p.std()
        if std == 0:
            return np.full_like(p, 0.5)
        p = (p - p.mean()) / std
    return _rescale(p)


def denoise(p, window=3):
    """Mean filter over ``window`` x ``window`` neighbourhoods.

    Out-of-range coordinates are clamped to the nearest edge pixel.
    """
    p = check_matrix(p, "patch")
    if isinstance(window, bool) or not isinstance(window, (int, np.integer)) or window < 1:
        raise UsageError("window must be a positive odd integer")
    if window % 2 == 0:
        raise UsageError(f"window must be odd, got {window}")
    if window > min(p.shape):
        raise UsageError(f"window {window} exceeds patch size {p.shape}")
    if window == 1:
        return p.copy()
    r = window // 2
    padded = np.pad(p, r, mode="edge")
    return sliding_window_view(padded, (window, window)).mean(axis=(-2, -1))


def preprocess_patch(p, config):
    if config.denoise_window > 1:
        p = denoise(p, config.denoise_window)
    return normalize_patch(p, config.mode)


def preprocess_images(X, config):
    X = check_images(X)
    return np.stack([preprocess_patch(p, config) for p in X])


class PatchPreprocessor(TransformerMixin, BaseEstimator):
    """Stateless transformer applying :func:`denoise` then :func:`normalize_patch`.

    Operates on arrays of shape (n_samples, height, width).
    """

    def __init__(self, mode="minmax", denoise_window=1):
        self.mode = mode
        self.denoise_window = denoise_window

    def fit(self, X, y=None):
        self.config_ = PreprocessConfig(self.mode, self.denoise_window)
        X = check_images(X)
        self.n_features_in_ = X.shape[1] * X.shape[2]
        return self

    def transform(self, X):
        return preprocess_images(X, PreprocessConfig(self.mode, self.denoise_window))
