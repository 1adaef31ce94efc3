"""Principal component analysis with a cyclic Jacobi eigen-solver.

Images are turned into sequences row by row: PCA is fitted on every image
row (a W-vector), and a patch becomes H score vectors of width k.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_images, check_matrix
from .exceptions import UsageError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_ratio: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n_components(self):
        return self.components.shape[0]

    @property
    def n_features(self):
        return self.components.shape[1]

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_ratio": self.explained_ratio.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        comps = np.asarray(d["components"], dtype=np.float64)
        return cls(
            mean=np.asarray(d["mean"], dtype=np.float64),
            components=comps.reshape(len(d["components"]), -1),
            explained_ratio=np.asarray(d["explained_ratio"], dtype=np.float64),
            eigenvalues=np.asarray(d.get("eigenvalues", [np.nan] * comps.shape[0]),
                                   dtype=np.float64),
        )


def jacobi_eigh(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps visit pairs (p, q), p < q, in row-major order and stop once the
    off-diagonal Frobenius norm falls below ``tol`` times the matrix norm.
    Returns ``(eigenvalues, eigenvectors)`` with vectors as columns, in
    descending eigenvalue order.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                if abs(apq) < 1e-300:
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if not math.isfinite(theta):
                    a[p, q] = a[q, p] = 0.0
                    continue
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0)) if theta else 1.0
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _fix_signs(vectors):
    """Make each row's largest-magnitude entry non-negative (first on ties)."""
    vectors = vectors.copy()
    for row in vectors:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return vectors


def pca_fit(rows, k):
    rows = check_matrix(rows, "rows")
    n, d = rows.shape
    if n < 2:
        raise UsageError("pca_fit needs at least two rows")
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= min(n - 1, d):
        raise UsageError(f"k must lie in [1, {min(n - 1, d)}], got {k!r}")
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / (n - 1)
    evals, evecs = jacobi_eigh(cov)
    total = np.clip(evals, 0.0, None).sum()
    kept = evals[:k]
    ratio = np.clip(kept, 0.0, None) / total if total > 0 else np.zeros(k)
    return PcaModel(mean=mean, components=_fix_signs(evecs[:, :k].T),
                    explained_ratio=ratio, eigenvalues=kept)


def pca_transform(model, rows):
    rows = check_matrix(rows, "rows")
    if rows.shape[1] != model.n_features:
        raise UsageError(f"rows have width {rows.shape[1]}, model expects {model.n_features}")
    return (rows - model.mean) @ model.components.T


def pca_inverse(model, scores):
    scores = check_matrix(scores, "scores")
    if scores.shape[1] != model.n_components:
        raise UsageError(f"scores have width {scores.shape[1]}, model expects {model.n_components}")
    return scores @ model.components + model.mean


def fit_rows(images, k):
    """Fit PCA on every row of every image in ``images`` (n, H, W)."""
    images = check_images(images)
    return pca_fit(images.reshape(-1, images.shape[2]), k)


def images_to_sequences(model, images):
    """(n, H, W) images -> (n, H, k) sequences of row scores."""
    images = check_images(images)
    n, h, w = images.shape
    return pca_transform(model, images.reshape(-1, w)).reshape(n, h, model.n_components)


class PrincipalComponents(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`pca_fit` for 2-D inputs."""

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y=None):
        self.model_ = pca_fit(X, self.n_components)
        self.n_features_in_ = self.model_.n_features
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return pca_transform(self.model_, X)

    def inverse_transform(self, X):
        check_is_fitted(self, "model_")
        return pca_inverse(self.model_, X)

    @property
    def components_(self):
        return self.model_.components

    @property
    def explained_variance_ratio_(self):
        return self.model_.explained_ratio


class RowPCA(TransformerMixin, BaseEstimator):
    """Row-wise PCA turning (n, H, W) images into (n, H, k) sequences."""

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y=None):
        self.model_ = fit_rows(X, self.n_components)
        self.n_features_in_ = self.model_.n_features
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return images_to_sequences(self.model_, X)
