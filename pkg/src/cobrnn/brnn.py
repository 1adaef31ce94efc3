"""Bidirectional tanh RNN classifier with exact backpropagation through time.

Each direction runs ``g_s = tanh(X_gw w_s + X_gg g_{s-1} + a_g)``, the
backward one over the reversed sequence, both starting from a zero state.
The per-step concatenation ``[g_fwd_s; g_bwd_s]`` is averaged over time and
mapped to class logits by ``X_pg pooled + a_p``, followed by softmax.

Arrays are batched as (batch, time, features) throughout; the single
sequence entry points add and strip the batch axis.
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._rng import Xoshiro256pp
from ._validation import check_labels, check_positive, check_positive_int, check_sequences
from .exceptions import NumericError, UsageError

PROB_FLOOR = 1e-12


@dataclass
class BrnnConfig:
    input_dim: int
    hidden_dim: int
    n_classes: int
    seq_len: int = None
    learning_rate: float = 0.05
    l2: float = 0.0
    epochs: int = 20
    batch: int = 10
    grad_clip: float = 5.0
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("input_dim", "hidden_dim", "n_classes", "epochs", "batch"):
            check_positive_int(getattr(self, name), f"brnn.{name}")
        if self.seq_len is not None:
            check_positive_int(self.seq_len, "brnn.seq_len")
        for name in ("learning_rate", "grad_clip", "init_scale"):
            check_positive(getattr(self, name), f"brnn.{name}")
        if not (self.l2 >= 0 and math.isfinite(self.l2)):
            raise UsageError(f"brnn.l2 must be a finite non-negative real, got {self.l2!r}")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class DirectionParams:
    X_gw: np.ndarray
    X_gg: np.ndarray
    a_g: np.ndarray


@dataclass
class BrnnParams:
    forward: DirectionParams
    backward: DirectionParams
    X_pg: np.ndarray
    a_p: np.ndarray

    # (name, is_weight) in serialisation and flattening order
    LAYOUT = (
        ("forward.X_gw", True), ("forward.X_gg", True), ("forward.a_g", False),
        ("backward.X_gw", True), ("backward.X_gg", True), ("backward.a_g", False),
        ("X_pg", True), ("a_p", False),
    )

    @classmethod
    def zeros(cls, input_dim, hidden_dim, n_classes):
        k, m, c = input_dim, hidden_dim, n_classes

        def direction():
            return DirectionParams(np.zeros((m, k)), np.zeros((m, m)), np.zeros(m))

        return cls(direction(), direction(), np.zeros((c, 2 * m)), np.zeros(c))

    @property
    def shape(self):
        m, k = self.forward.X_gw.shape
        return k, m, self.a_p.shape[0]

    def get(self, name):
        obj = self
        for part in name.split("."):
            obj = getattr(obj, part)
        return obj

    def arrays(self):
        return [self.get(name) for name, _ in self.LAYOUT]

    def weights(self):
        return [self.get(name) for name, is_w in self.LAYOUT if is_w]

    @property
    def size(self):
        return sum(a.size for a in self.arrays())

    def to_vector(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def from_vector(self, vec):
        """New params with this object's shapes, filled from ``vec``."""
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.size:
            raise UsageError(f"vector has {vec.size} entries, expected {self.size}")
        out = BrnnParams.zeros(*self.shape)
        pos = 0
        for a in out.arrays():
            a[...] = vec[pos:pos + a.size].reshape(a.shape)
            pos += a.size
        return out

    def copy(self):
        return self.from_vector(self.to_vector())

    def to_dict(self):
        return {name: {"shape": list(self.get(name).shape), "data": self.get(name).tolist()}
                for name, _ in self.LAYOUT}

    @classmethod
    def from_dict(cls, d):
        k = d["forward.X_gw"]["shape"][1]
        m = d["forward.X_gw"]["shape"][0]
        c = d["a_p"]["shape"][0]
        out = cls.zeros(k, m, c)
        for name, _ in cls.LAYOUT:
            target = out.get(name)
            value = np.asarray(d[name]["data"], dtype=np.float64)
            if list(d[name]["shape"]) != list(target.shape) or value.shape != target.shape:
                raise UsageError(f"parameter {name} has shape {value.shape}, expected {target.shape}")
            target[...] = value
        return out

    def __eq__(self, other):
        if not isinstance(other, BrnnParams):
            return NotImplemented
        return all(a.shape == b.shape and np.array_equal(a, b)
                   for a, b in zip(self.arrays(), other.arrays()))


@dataclass
class ForwardTrace:
    """Intermediate values of a forward pass.

    ``forward_hidden[..., s, :]`` and ``backward_hidden[..., s, :]`` are the
    two directions' states aligned to input step ``s``.
    """

    inputs: np.ndarray
    forward_hidden: np.ndarray
    backward_hidden: np.ndarray
    pooled: np.ndarray
    logits: np.ndarray
    probs: np.ndarray
    batched: bool = field(default=True, repr=False)


def brnn_init(cfg):
    """Weights ~ U(-s/sqrt(fan_in), s/sqrt(fan_in)); biases zero."""
    rng = Xoshiro256pp.for_stream(cfg.seed, "brnn-init")
    params = BrnnParams.zeros(cfg.input_dim, cfg.hidden_dim, cfg.n_classes)
    for w in params.weights():
        bound = cfg.init_scale / math.sqrt(w.shape[1])
        w[...] = rng.uniform_array(-bound, bound, w.shape)
    return params


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _run_direction(p, X, reverse):
    b, t, _ = X.shape
    m = p.X_gg.shape[0]
    out = np.empty((b, t, m))
    h = np.zeros((b, m))
    steps = range(t - 1, -1, -1) if reverse else range(t)
    for s in steps:
        h = np.tanh(X[:, s] @ p.X_gw.T + h @ p.X_gg.T + p.a_g)
        out[:, s] = h
    return out


def brnn_forward_batch(params, X):
    k = params.shape[0]
    X = check_sequences(X, input_dim=k)
    hf = _run_direction(params.forward, X, reverse=False)
    hb = _run_direction(params.backward, X, reverse=True)
    pooled = np.concatenate([hf.mean(axis=1), hb.mean(axis=1)], axis=1)
    logits = pooled @ params.X_pg.T + params.a_p
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits in forward pass")
    return ForwardTrace(X, hf, hb, pooled, logits, softmax(logits))


def brnn_forward(params, sequence):
    """Forward pass over one (T, k) sequence."""
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2:
        raise UsageError(f"sequence must have shape (T, k), got {seq.shape}")
    tr = brnn_forward_batch(params, seq[None])
    return ForwardTrace(tr.inputs[0], tr.forward_hidden[0], tr.backward_hidden[0],
                        tr.pooled[0], tr.logits[0], tr.probs[0], batched=False)


def cross_entropy(probs, label):
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[-1]:
        raise UsageError(f"label {label} outside [0, {probs.shape[-1]})")
    return float(-math.log(max(probs[label], PROB_FLOOR)))


def batch_cross_entropy(probs, labels):
    picked = probs[np.arange(len(labels)), labels]
    return -np.log(np.maximum(picked, PROB_FLOOR))


def _bptt_direction(p, X, H, dstep, reverse, grad):
    b, t, _ = X.shape
    m = H.shape[2]
    carry = np.zeros((b, m))
    zero = np.zeros((b, m))
    steps = range(t) if reverse else range(t - 1, -1, -1)
    for s in steps:
        dz = (dstep + carry) * (1.0 - H[:, s] ** 2)
        if reverse:
            prev = H[:, s + 1] if s + 1 < t else zero
        else:
            prev = H[:, s - 1] if s > 0 else zero
        grad.X_gw += dz.T @ X[:, s]
        grad.X_gg += dz.T @ prev
        grad.a_g += dz.sum(axis=0)
        carry = dz @ p.X_gg


def brnn_backward_batch(params, trace, labels, l2=0.0):
    """Gradient of the batch-mean cross-entropy plus ``l2/2 * ||weights||^2``."""
    X = trace.inputs
    b, t, _ = X.shape
    _, m, c = params.shape
    labels = check_labels(labels, n_classes=c, n_samples=b)
    grad = BrnnParams.zeros(*params.shape)
    dlogits = trace.probs.copy()
    dlogits[np.arange(b), labels] -= 1.0
    dlogits /= b
    grad.X_pg += dlogits.T @ trace.pooled
    grad.a_p += dlogits.sum(axis=0)
    dpooled = dlogits @ params.X_pg / t
    _bptt_direction(params.forward, X, trace.forward_hidden, dpooled[:, :m], False, grad.forward)
    _bptt_direction(params.backward, X, trace.backward_hidden, dpooled[:, m:], True, grad.backward)
    if l2:
        for g, w in zip(grad.weights(), params.weights()):
            g += l2 * w
    return grad


def brnn_backward(params, trace, label, l2=0.0):
    """Exact gradient for one sample's trace."""
    if trace.batched:
        return brnn_backward_batch(params, trace, np.atleast_1d(label), l2)
    tr = ForwardTrace(trace.inputs[None], trace.forward_hidden[None], trace.backward_hidden[None],
                      trace.pooled[None], trace.logits[None], trace.probs[None])
    return brnn_backward_batch(params, tr, np.array([label]), l2)


def regularised_loss(params, trace, labels, l2=0.0):
    """Mean cross-entropy plus the L2 penalty; the objective behind the gradient."""
    ce = float(batch_cross_entropy(trace.probs, np.asarray(labels)).mean())
    return ce + 0.5 * l2 * sum(float(np.sum(w * w)) for w in params.weights())


def clip_global_norm(grad, max_norm):
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grad.arrays()))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grad.arrays():
            g *= scale
    return norm


def sgd_epoch(params, X, y, cfg, rng=None):
    """One pass of mini-batch SGD.

    Returns ``(new_params, mean_loss)`` where ``mean_loss`` is the mean
    per-sample cross-entropy seen during the epoch, each batch measured
    before its update.  ``rng`` drives the shuffle; by default a fresh stream
    derived from ``cfg.seed``.
    """
    X = check_sequences(X, input_dim=cfg.input_dim)
    y = check_labels(y, n_classes=cfg.n_classes, n_samples=X.shape[0])
    if X.shape[0] == 0:
        raise UsageError("sgd_epoch needs at least one sample")
    if rng is None:
        rng = Xoshiro256pp.for_stream(cfg.seed, "brnn-shuffle")
    order = rng.permutation(X.shape[0])
    params = params.copy()
    total = 0.0
    for bi, start in enumerate(range(0, len(order), cfg.batch)):
        idx = order[start:start + cfg.batch]
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                trace = brnn_forward_batch(params, X[idx])
            except NumericError:
                raise NumericError(f"non-finite loss in batch {bi}") from None
            losses = batch_cross_entropy(trace.probs, y[idx])
            if not np.all(np.isfinite(losses)):
                raise NumericError(f"non-finite loss in batch {bi}")
            total += float(losses.sum())
            grad = brnn_backward_batch(params, trace, y[idx], cfg.l2)
            clip_global_norm(grad, cfg.grad_clip)
            for p, g in zip(params.arrays(), grad.arrays()):
                p -= cfg.learning_rate * g
        if not all(np.all(np.isfinite(p)) for p in params.arrays()):
            raise NumericError(f"non-finite parameters after batch {bi}")
    return params, total / X.shape[0]


def train_brnn(cfg, X, y, params=None):
    """Initialise (unless ``params`` given) and run ``cfg.epochs`` epochs."""
    if params is None:
        params = brnn_init(cfg)
    rng = Xoshiro256pp.for_stream(cfg.seed, "brnn-shuffle")
    losses = []
    for _ in range(cfg.epochs):
        params, loss = sgd_epoch(params, X, y, cfg, rng)
        losses.append(loss)
    return params, losses


def brnn_predict_proba(params, X):
    return brnn_forward_batch(params, X).probs


def brnn_predict(params, sequence):
    """``(class, probs)`` for one sequence; ties go to the lowest class index."""
    probs = brnn_forward(params, sequence).probs
    return int(np.argmax(probs)), probs


def mean_loss(params, X, y):
    trace = brnn_forward_batch(params, X)
    return float(batch_cross_entropy(trace.probs, np.asarray(y)).mean())


class BRNNClassifier(ClassifierMixin, BaseEstimator):
    """scikit-learn style classifier over (n_samples, seq_len, input_dim) arrays."""

    def __init__(self, hidden_dim=16, learning_rate=0.05, l2=1e-4, epochs=30, batch=10,
                 grad_clip=5.0, init_scale=1.0, seed=0):
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.l2 = l2
        self.epochs = epochs
        self.batch = batch
        self.grad_clip = grad_clip
        self.init_scale = init_scale
        self.seed = seed

    def fit(self, X, y):
        X = check_sequences(X)
        y = np.asarray(y)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        self.config_ = BrnnConfig(
            input_dim=X.shape[2], hidden_dim=self.hidden_dim, n_classes=len(self.classes_),
            seq_len=X.shape[1], learning_rate=self.learning_rate, l2=self.l2,
            epochs=self.epochs, batch=self.batch, grad_clip=self.grad_clip,
            init_scale=self.init_scale, seed=self.seed)
        self.params_, self.loss_curve_ = train_brnn(self.config_, X, y_enc)
        self.n_features_in_ = X.shape[2]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        return brnn_predict_proba(self.params_, X)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
