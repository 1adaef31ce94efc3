"""Multinomial logistic regression on raw pixels; a floor for the BRNN."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_finite


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class SoftmaxRegression(ClassifierMixin, BaseEstimator):
    """Full-batch gradient descent on the L2-penalised cross-entropy.

    Inputs of any trailing shape are flattened per sample.
    """

    def __init__(self, learning_rate=0.5, n_iter=500, l2=1e-4):
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.l2 = l2

    def _flatten(self, X):
        X = check_finite(X, "X")
        return X.reshape(X.shape[0], -1)

    def fit(self, X, y):
        X = self._flatten(X)
        self.classes_, y_enc = np.unique(np.asarray(y), return_inverse=True)
        n, d = X.shape
        c = len(self.classes_)
        onehot = np.eye(c)[y_enc]
        W = np.zeros((d, c))
        b = np.zeros(c)
        for _ in range(self.n_iter):
            err = (_softmax(X @ W + b) - onehot) / n
            W -= self.learning_rate * (X.T @ err + self.l2 * W)
            b -= self.learning_rate * err.sum(axis=0)
        self.coef_, self.intercept_ = W, b
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "coef_")
        return _softmax(self._flatten(X) @ self.coef_ + self.intercept_)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
