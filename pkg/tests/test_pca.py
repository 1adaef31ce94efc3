import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cobrnn.exceptions import NumericError, UsageError
from cobrnn.pca import (PcaModel, PrincipalComponents, RowPCA, jacobi_eigh, pca_fit,
                        pca_inverse, pca_transform)
from oracles import jacobi_oracle, sample_covariance


def test_line_y_equals_x():
    rows = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [-1.0, -1.0]])
    m = pca_fit(rows, 1)
    assert np.allclose(m.components, [[1 / math.sqrt(2), 1 / math.sqrt(2)]], atol=1e-12)
    assert np.allclose(m.explained_ratio, [1.0])


def test_projection_arithmetic():
    m = PcaModel(np.zeros(2), np.array([[1, 1]]) / math.sqrt(2), np.array([1.0]), np.array([1.0]))
    assert pca_transform(m, [[2.0, 2.0]])[0, 0] == pytest.approx(2 * math.sqrt(2))


def test_full_rank_round_trip():
    X = np.random.default_rng(0).normal(size=(12, 5))
    m = pca_fit(X, 5)
    assert np.abs(pca_inverse(m, pca_transform(m, X)) - X).max() < 1e-8


def test_matches_independent_jacobi_on_5x3():
    X = np.random.default_rng(1).normal(size=(5, 3))
    m = pca_fit(X, 3)
    vals, vecs = jacobi_oracle(sample_covariance(X.tolist()))
    assert np.abs(m.eigenvalues - vals).max() < 1e-8
    assert np.abs(m.components - np.array(vecs)).max() < 1e-8


def test_mean_row_maps_to_zero():
    X = np.random.default_rng(2).normal(size=(8, 4))
    m = pca_fit(X, 2)
    assert np.allclose(pca_transform(m, m.mean[None]), 0, atol=1e-15)


def test_score_variance_equals_eigenvalue():
    X = np.random.default_rng(3).normal(size=(30, 6)) @ np.diag([3, 2, 1, 0.5, 0.2, 0.1])
    m = pca_fit(X, 4)
    scores = pca_transform(m, X)
    assert np.abs(scores.var(axis=0, ddof=1) - m.eigenvalues).max() < 1e-8


def test_zero_scores_give_mean():
    X = np.random.default_rng(4).normal(size=(6, 3))
    m = pca_fit(X, 2)
    assert np.allclose(pca_inverse(m, np.zeros((3, 2))), m.mean)


def test_truncated_reconstruction_error():
    X = np.random.default_rng(5).normal(size=(15, 6))
    m_full = pca_fit(X, 6)
    for k in range(1, 6):
        m = pca_fit(X, k)
        err = np.sum((pca_inverse(m, pca_transform(m, X)) - X) ** 2)
        assert err == pytest.approx(m_full.eigenvalues[k:].sum() * (len(X) - 1), abs=1e-6)


def test_duplicated_column_gives_zero_eigenvalue():
    X = np.random.default_rng(6).normal(size=(10, 3))
    X = np.column_stack([X, X[:, 1]])
    m = pca_fit(X, 4)
    assert abs(m.eigenvalues[-1]) < 1e-10


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 20), d=st.integers(1, 8), seed=st.integers(0, 10**6))
def test_model_invariants_on_random_data(n, d, seed):
    X = np.random.default_rng(seed).normal(size=(n, d))
    k = min(n - 1, d)
    m = pca_fit(X, k)
    assert np.abs(m.components @ m.components.T - np.eye(k)).max() < 1e-8
    assert np.all(np.diff(m.explained_ratio) <= 1e-15)
    assert np.all(m.explained_ratio >= 0) and m.explained_ratio.sum() <= 1 + 1e-12


def test_deterministic():
    X = np.random.default_rng(7).normal(size=(9, 5))
    a, b = pca_fit(X, 3), pca_fit(X, 3)
    assert np.array_equal(a.components, b.components) and np.array_equal(a.mean, b.mean)


def test_sign_convention():
    m = pca_fit(np.random.default_rng(8).normal(size=(10, 4)), 4)
    for row in m.components:
        assert row[np.argmax(np.abs(row))] >= 0


@pytest.mark.parametrize("k", [0, 3, 5])
def test_k_out_of_range(k):
    with pytest.raises(UsageError):
        pca_fit(np.random.default_rng(0).normal(size=(3, 4)), k)


def test_width_mismatch_and_non_finite():
    m = pca_fit(np.random.default_rng(0).normal(size=(5, 3)), 2)
    with pytest.raises(UsageError):
        pca_transform(m, np.zeros((2, 4)))
    with pytest.raises(UsageError):
        pca_inverse(m, np.zeros((2, 3)))
    with pytest.raises(NumericError):
        pca_fit(np.array([[0.0, np.inf], [1.0, 2.0], [3.0, 1.0]]), 1)


def test_jacobi_agrees_with_lapack():
    a = np.random.default_rng(9).normal(size=(7, 7))
    a = a + a.T
    w, _ = jacobi_eigh(a)
    assert np.allclose(w, np.sort(np.linalg.eigvalsh(a))[::-1], atol=1e-10)


def test_estimators():
    X = np.random.default_rng(10).normal(size=(20, 5))
    pc = PrincipalComponents(3).fit(X)
    assert pc.transform(X).shape == (20, 3)
    assert pc.inverse_transform(pc.transform(X)).shape == X.shape
    imgs = np.random.default_rng(11).uniform(size=(4, 6, 5))
    assert RowPCA(2).fit_transform(imgs).shape == (4, 6, 2)


def test_model_dict_round_trip():
    m = pca_fit(np.random.default_rng(12).normal(size=(6, 4)), 2)
    m2 = PcaModel.from_dict(m.to_dict())
    assert np.array_equal(m.components, m2.components)
