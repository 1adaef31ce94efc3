import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cobrnn.brnn import (BRNNClassifier, BrnnConfig, BrnnParams, brnn_backward, brnn_forward,
                         brnn_forward_batch, brnn_init, brnn_predict, cross_entropy, mean_loss,
                         regularised_loss, sgd_epoch, softmax, train_brnn)
from cobrnn.exceptions import NumericError, UsageError
from oracles import central_difference


def random_params(rng, k, m, c, scale=1.0):
    t = BrnnParams.zeros(k, m, c)
    return t.from_vector(scale * rng.normal(size=t.size))


def test_zero_params_uniform():
    p = BrnnParams.zeros(3, 4, 5)
    tr = brnn_forward(p, np.random.default_rng(0).normal(size=(6, 3)))
    assert np.all(tr.forward_hidden == 0) and np.all(tr.backward_hidden == 0)
    assert np.all(tr.logits == 0) and np.allclose(tr.probs, 0.2)


def test_scalar_forward_value():
    p = BrnnParams.zeros(1, 1, 2)
    p.forward.X_gw[0, 0] = 0.5
    p.forward.X_gg[0, 0] = 0.3
    tr = brnn_forward(p, [[1.0]])
    assert tr.forward_hidden[0, 0] == pytest.approx(0.46211715726000974, abs=1e-12)


def test_backward_direction_is_reversed_forward_recurrence():
    rng = np.random.default_rng(1)
    p = random_params(rng, 2, 3, 2)
    seq = rng.normal(size=(5, 2))
    tr = brnn_forward(p, seq)
    q = BrnnParams.zeros(2, 3, 2)
    q.forward = p.backward
    tr_rev = brnn_forward(q, seq[::-1])
    assert np.allclose(tr.backward_hidden, tr_rev.forward_hidden[::-1], atol=1e-15)


def test_reversal_symmetry():
    rng = np.random.default_rng(2)
    k, m, c = 3, 4, 3
    p = random_params(rng, k, m, c)
    seq = rng.normal(size=(6, k))
    q = BrnnParams(p.backward, p.forward, np.hstack([p.X_pg[:, m:], p.X_pg[:, :m]]), p.a_p)
    a, b = brnn_forward(p, seq), brnn_forward(q, seq[::-1])
    assert np.allclose(a.pooled, np.concatenate([b.pooled[m:], b.pooled[:m]]), atol=1e-14)
    assert np.allclose(a.logits, b.logits, atol=1e-13)


def test_softmax_large_logits():
    for scale in (1e3, -1e3):
        probs = softmax(np.array([scale, 0.0, scale / 2]))
        assert abs(probs.sum() - 1) < 1e-12 and np.all(np.isfinite(probs))


def test_softmax_shift_invariance():
    z = np.array([0.3, -1.2, 2.0])
    assert np.allclose(softmax(z), softmax(z + 17.5), atol=1e-15)


def test_cross_entropy():
    assert cross_entropy(np.full(4, 0.25), 2) == pytest.approx(math.log(4))
    assert cross_entropy(np.array([0.0, 1.0]), 1) == 0.0
    assert cross_entropy(np.array([0.7, 0.2, 0.1]), 1) == pytest.approx(1.6094379124341003)
    assert cross_entropy(np.array([1.0, 0.0]), 1) == pytest.approx(-math.log(1e-12))
    with pytest.raises(UsageError):
        cross_entropy(np.array([0.5, 0.5]), 2)


def fd_check(rng, k, m, t, c, l2):
    p = random_params(rng, k, m, c)
    seq = rng.normal(size=(t, k))
    label = int(rng.integers(c))
    analytic = brnn_backward(p, brnn_forward(p, seq), label, l2).to_vector()

    def loss(v):
        q = p.from_vector(v)
        return regularised_loss(q, brnn_forward_batch(q, seq[None]), [label], l2)

    numeric = central_difference(loss, p.to_vector(), h=1e-5)
    # 1e-9 absolute slack covers difference roundoff (~1e-11) on near-zero entries
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / (scale + 1e-9 / 1e-4)))


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 4), m=st.integers(1, 4), t=st.integers(1, 5), c=st.integers(2, 3),
       l2=st.sampled_from([0.0, 0.01, 0.3]), seed=st.integers(0, 10**6))
def test_gradient_matches_finite_differences(k, m, t, c, l2, seed):
    assert fd_check(np.random.default_rng(seed), k, m, t, c, l2) < 1e-4


def test_logit_gradient_vanishes_on_confident_prediction():
    p = BrnnParams.zeros(1, 1, 3)
    p.a_p[:] = [0.0, 60.0, 0.0]
    g = brnn_backward(p, brnn_forward(p, [[0.5]]), 1)
    assert np.abs(g.a_p).max() < 1e-9


def test_zero_params_bias_gradient_closed_form():
    p = BrnnParams.zeros(2, 3, 4)
    g = brnn_backward(p, brnn_forward(p, np.ones((3, 2))), 2)
    assert np.allclose(g.a_p, np.full(4, 0.25) - np.eye(4)[2])


def test_init_statistics_and_determinism():
    cfg = BrnnConfig(10, 100, 3, init_scale=1.0, seed=3)
    a, b = brnn_init(cfg), brnn_init(cfg)
    assert a == b
    assert all(np.all(bias == 0) for bias in (a.forward.a_g, a.backward.a_g, a.a_p))
    w = np.concatenate([x.ravel() for x in (a.forward.X_gg, a.backward.X_gg)])
    assert np.abs(w).max() <= 1 / math.sqrt(100)
    sigma = (1 / math.sqrt(100)) / math.sqrt(3 * w.size)
    assert abs(w.mean()) < 3 * sigma
    many = brnn_init(BrnnConfig(1, 224, 1, seed=9))
    w = np.concatenate([many.forward.X_gg.ravel(), many.backward.X_gg.ravel()])
    assert w.size >= 10**5
    assert abs(w.mean()) < 3 * (1 / math.sqrt(224)) / math.sqrt(3 * w.size)


@pytest.mark.parametrize("field,value", [("init_scale", 0.0), ("learning_rate", -1.0),
                                         ("grad_clip", 0.0), ("hidden_dim", 0)])
def test_config_invariants(field, value):
    kwargs = dict(input_dim=2, hidden_dim=2, n_classes=2)
    kwargs[field] = value
    with pytest.raises(UsageError):
        BrnnConfig(**kwargs)


def test_forward_errors():
    p = BrnnParams.zeros(2, 2, 2)
    with pytest.raises(UsageError):
        brnn_forward(p, np.zeros((3, 3)))
    with pytest.raises(NumericError):
        brnn_forward(p, np.array([[np.nan, 0.0]]))


def test_zero_learning_rate_leaves_params():
    rng = np.random.default_rng(4)
    X, y = rng.normal(size=(7, 3, 2)), rng.integers(0, 3, 7)
    cfg = BrnnConfig(2, 3, 3, learning_rate=1e-300, batch=3, seed=1)
    p0 = brnn_init(cfg)
    p1, loss = sgd_epoch(p0, X, y, cfg)
    assert np.allclose(p1.to_vector(), p0.to_vector(), atol=1e-290)
    assert loss == pytest.approx(mean_loss(p0, X, y), rel=1e-12)


def test_single_sample_memorisation():
    rng = np.random.default_rng(5)
    X, y = rng.normal(size=(1, 4, 3)), np.array([1])
    cfg = BrnnConfig(3, 4, 3, learning_rate=0.5, epochs=200, batch=1, seed=2)
    params, losses = train_brnn(cfg, X, y)
    assert losses[-1] < 0.01
    assert brnn_predict(params, X[0])[0] == 1


def test_training_deterministic():
    rng = np.random.default_rng(6)
    X, y = rng.normal(size=(13, 3, 2)), rng.integers(0, 2, 13)
    cfg = BrnnConfig(2, 3, 2, epochs=3, batch=4, seed=8)
    assert train_brnn(cfg, X, y)[0] == train_brnn(cfg, X, y)[0]


def test_divergence_raises_numeric_error():
    X = np.random.default_rng(10).normal(size=(3, 3, 1))
    cfg = BrnnConfig(1, 2, 2, learning_rate=1e308, batch=1, seed=0)
    with pytest.raises(NumericError, match=r"batch \d"):
        sgd_epoch(brnn_init(cfg), X, np.array([0, 1, 0]), cfg)


def test_predict_tie_and_argmax():
    assert brnn_predict(BrnnParams.zeros(2, 2, 3), np.zeros((2, 2)))[0] == 0
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = random_params(rng, 2, 3, 4)
        cls, probs = brnn_predict(p, rng.normal(size=(3, 2)))
        assert all(probs[cls] > probs[j] or (probs[cls] == probs[j] and cls <= j)
                   for j in range(4))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), scale=st.floats(0.1, 50))
def test_trace_invariants(seed, scale):
    rng = np.random.default_rng(seed)
    p = random_params(rng, 3, 3, 3, scale)
    tr = brnn_forward_batch(p, rng.normal(size=(4, 5, 3)))
    assert np.allclose(tr.probs.sum(axis=1), 1, atol=1e-12)
    assert np.all(np.abs(tr.forward_hidden) <= 1) and np.all(np.abs(tr.backward_hidden) <= 1)


def test_params_dict_round_trip():
    p = random_params(np.random.default_rng(8), 2, 3, 4)
    assert BrnnParams.from_dict(p.to_dict()) == p


def test_classifier_estimator():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(40, 4, 2))
    y = np.where(X[:, :, 0].sum(axis=1) > 0, "up", "down")
    clf = BRNNClassifier(hidden_dim=4, epochs=40, learning_rate=0.2, seed=1).fit(X, y)
    assert set(clf.predict(X)) <= {"up", "down"}
    assert clf.score(X, y) >= 0.9
    assert clf.predict_proba(X).shape == (40, 2)
