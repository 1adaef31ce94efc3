"""CO-BRNN: preprocessing, row PCA and a BRNN whose training hyperparameters
are searched by the cuttlefish optimiser.

The optimiser searches the cube [-1, 1]^4, mapped affinely onto four genes:
log10 learning rate, hidden size, number of PCA components and log10 L2
strength.  Searching a centred cube keeps the optimiser's pull towards the
origin away from the box corners.  A candidate's fitness is the validation
cross-entropy after a short inner SGD run.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import pca as pca_mod
from ._rng import derive_seed
from ._validation import check_images
from .brnn import (BrnnConfig, BrnnParams, batch_cross_entropy, brnn_forward_batch,
                   brnn_init, mean_loss, train_brnn)
from .cuttlefish import DEFAULT_GROUP_FRACTIONS, CuttlefishConfig, cf_optimize
from .dataset import Dataset, SplitSpec, split
from .exceptions import FormatError, NumericError, UsageError
from .metrics import classification_report
from .preprocess import PreprocessConfig, preprocess_images

MODEL_FORMAT = "co-brnn v1"
FAILURE_SENTINEL = 1e9
MAX_DIRECT_PARAMS = 200

LOG_LR_RANGE = (-3.0, -0.5)
HIDDEN_RANGE = (2, 64)
PCA_K_MIN = 2
LOG_L2_RANGE = (-6.0, -1.0)


def hyper_bounds(width):
    lower = np.array([LOG_LR_RANGE[0], HIDDEN_RANGE[0], PCA_K_MIN, LOG_L2_RANGE[0]], dtype=float)
    upper = np.array([LOG_LR_RANGE[1], HIDDEN_RANGE[1], width, LOG_L2_RANGE[1]], dtype=float)
    return lower, upper


def genes_from_unit(z, width):
    """Affine map from the search box [-1, 1]^4 onto the gene box."""
    lower, upper = hyper_bounds(width)
    return lower + (np.asarray(z, dtype=np.float64) + 1.0) * 0.5 * (upper - lower)


def round_half_away(x):
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class Hyperparameters:
    learning_rate: float
    hidden_dim: int
    pca_k: int
    l2: float

    def key(self):
        return f"lr={self.learning_rate!r};hidden={self.hidden_dim};k={self.pca_k};l2={self.l2!r}"

    def to_dict(self):
        return {"learning_rate": self.learning_rate, "hidden_dim": self.hidden_dim,
                "pca_k": self.pca_k, "l2": self.l2}


def decode_hyper(genes, width):
    g = [float(v) for v in genes]
    if len(g) != 4:
        raise UsageError("expected four genes")
    return Hyperparameters(
        learning_rate=10.0 ** g[0],
        hidden_dim=min(max(round_half_away(g[1]), HIDDEN_RANGE[0]), HIDDEN_RANGE[1]),
        pca_k=min(max(round_half_away(g[2]), PCA_K_MIN), width),
        l2=10.0 ** g[3],
    )


@dataclass(frozen=True)
class InnerConfig:
    """Settings for the gradient loop run inside each fitness evaluation."""

    search_epochs: int = 30
    epochs: int = 40
    batch: int = 10
    grad_clip: float = 5.0
    init_scale: float = 1.0
    preprocess: PreprocessConfig = PreprocessConfig()


@dataclass(frozen=True)
class SearchConfig:
    pop_size: int = 10
    budget: int = 60
    group_fractions: tuple = DEFAULT_GROUP_FRACTIONS
    q1: float = 1.0
    q2: float = -0.5
    u1: float = 1.0
    u2: float = -0.5


def _features(images, preprocess, pca_model):
    return pca_mod.images_to_sequences(pca_model, preprocess_images(images, preprocess))


def _fit_features(images, preprocess, k):
    cleaned = preprocess_images(images, preprocess)
    model = pca_mod.fit_rows(cleaned, k)
    return model, pca_mod.images_to_sequences(model, cleaned)


def _brnn_config(hyper, inner, n_classes, seq_len, epochs, seed):
    return BrnnConfig(input_dim=hyper.pca_k, hidden_dim=hyper.hidden_dim, n_classes=n_classes,
                      seq_len=seq_len, learning_rate=hyper.learning_rate, l2=hyper.l2,
                      epochs=epochs, batch=inner.batch, grad_clip=inner.grad_clip,
                      init_scale=inner.init_scale, seed=seed)


def _check_compatible(a, b):
    if (a.n_classes, a.height, a.width) != (b.n_classes, b.height, b.width):
        raise UsageError("datasets must share geometry and class count")


def fitness_of_hyper(genes, train, val, inner, seed, cache=None):
    """Validation cross-entropy of a short training run (lower is better).

    Numeric failure inside training yields ``FAILURE_SENTINEL``.  Results
    are memoised in ``cache`` keyed by the decoded hyperparameters.
    """
    if len(val) == 0:
        raise UsageError("validation set is empty")
    hyper = decode_hyper(genes, train.width)
    key = hyper.key()
    if cache is not None and key in cache:
        return cache[key]
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            pca_model, seqs = _fit_features(train.images, inner.preprocess, hyper.pca_k)
            cfg = _brnn_config(hyper, inner, train.n_classes, train.height, inner.search_epochs,
                               derive_seed(seed, "fitness:" + key))
            params, _ = train_brnn(cfg, seqs, train.labels)
            value = mean_loss(params, _features(val.images, inner.preprocess, pca_model),
                              val.labels)
        if not math.isfinite(value):
            value = FAILURE_SENTINEL
    except NumericError:
        value = FAILURE_SENTINEL
    if cache is not None:
        cache[key] = value
    return value


class HyperObjective:
    """Objective handed to the optimiser; records every evaluation."""

    def __init__(self, train, val, inner, seed):
        self.train, self.val, self.inner, self.seed = train, val, inner, seed
        self.cache = {}
        self.log = []

    def __call__(self, z):
        genes = genes_from_unit(z, self.train.width)
        hyper = decode_hyper(genes, self.train.width)
        cached = hyper.key() in self.cache
        value = fitness_of_hyper(genes, self.train, self.val, self.inner, self.seed, self.cache)
        self.log.append({"genes": [float(g) for g in genes], "hyper": hyper.to_dict(),
                         "fitness": value, "cached": cached})
        return value


@dataclass(eq=False)
class TrainedModel:
    preprocess: PreprocessConfig
    pca: pca_mod.PcaModel
    params: BrnnParams
    brnn_config: BrnnConfig
    n_classes: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        k, _, c = self.params.shape
        if self.pca.n_components != k or self.brnn_config.input_dim != k:
            raise UsageError("PCA component count does not match the BRNN input width")
        if c != self.n_classes or self.brnn_config.n_classes != c:
            raise UsageError("class count mismatch between model parts")

    @property
    def height(self):
        return self.brnn_config.seq_len

    @property
    def width(self):
        return self.pca.n_features

    def sequences(self, images):
        images = check_images(images)
        if images.shape[1:] != (self.height, self.width):
            raise UsageError(f"images are {images.shape[1:]}, model expects "
                             f"{(self.height, self.width)}")
        return _features(images, self.preprocess, self.pca)

    def predict_proba(self, images):
        return brnn_forward_batch(self.params, self.sequences(images)).probs

    def predict(self, images):
        return np.argmax(self.predict_proba(images), axis=1)

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "preprocess": {"mode": self.preprocess.mode,
                           "denoise_window": self.preprocess.denoise_window},
            "pca": self.pca.to_dict(),
            "brnn": {"config": self.brnn_config.to_dict(), "params": self.params.to_dict()},
            "classes": self.n_classes,
            "provenance": self.provenance,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT:
            raise FormatError(f"expected format {MODEL_FORMAT!r}, got {d.get('format')!r}")
        try:
            return cls(
                preprocess=PreprocessConfig(**d["preprocess"]),
                pca=pca_mod.PcaModel.from_dict(d["pca"]),
                params=BrnnParams.from_dict(d["brnn"]["params"]),
                brnn_config=BrnnConfig(**d["brnn"]["config"]),
                n_classes=int(d["classes"]),
                provenance=d.get("provenance", {}),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"model document is missing or mistypes {exc}") from None

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", exc.lineno) from None


@dataclass
class SearchLog:
    best_genes: list
    best_hyper: Hyperparameters
    best_fitness: float
    curve: list
    evaluations: list
    evals_used: int
    initial_best: float


def fit_final(train, hyper, inner, seed, provenance=None):
    """Train preprocessing, PCA and BRNN at fixed hyperparameters."""
    pca_model, seqs = _fit_features(train.images, inner.preprocess, hyper.pca_k)
    cfg = _brnn_config(hyper, inner, train.n_classes, train.height, inner.epochs,
                       derive_seed(seed, "final:" + hyper.key()))
    params, _ = train_brnn(cfg, seqs, train.labels)
    return TrainedModel(inner.preprocess, pca_model, params, cfg, train.n_classes,
                        dict(provenance or {}))


def train_co_brnn(train, val, search=SearchConfig(), inner=InnerConfig(), seed=0,
                  config_sha=None):
    """Search hyperparameters with the cuttlefish optimiser, then retrain on
    train + val at the best point.  Returns ``(TrainedModel, SearchLog)``."""
    _check_compatible(train, val)
    cfg = CuttlefishConfig(dim=4, lower=-1.0, upper=1.0, pop_size=search.pop_size,
                           group_fractions=search.group_fractions, q1=search.q1, q2=search.q2,
                           u1=search.u1, u2=search.u2, budget=search.budget,
                           seed=derive_seed(seed, "co-search"))
    objective = HyperObjective(train, val, inner, seed)
    result = cf_optimize(cfg, objective)
    best_genes = genes_from_unit(result.best_point, train.width)
    hyper = decode_hyper(best_genes, train.width)
    provenance = {"seed": seed, "config_sha": config_sha, "evals": result.evals_used,
                  "hyperparameters": hyper.to_dict(), "search_fitness": result.best_fitness}
    model = fit_final(Dataset.concatenate(train, val), hyper, inner, seed, provenance)
    log = SearchLog(best_genes.tolist(), hyper, result.best_fitness, result.curve,
                    objective.log, result.evals_used, result.curve[0])
    return model, log


def train_direct_weights(cfg, X, y, search=SearchConfig(pop_size=30, budget=20000),
                         bound=3.0, seed=0):
    """Optimise every BRNN weight directly with the cuttlefish optimiser.

    Fitness is the mean training cross-entropy.  Only tiny nets
    (at most ``MAX_DIRECT_PARAMS`` parameters) are accepted.
    Returns ``(BrnnParams, CuttlefishResult)``.
    """
    template = BrnnParams.zeros(cfg.input_dim, cfg.hidden_dim, cfg.n_classes)
    if template.size > MAX_DIRECT_PARAMS:
        raise UsageError(f"network has {template.size} parameters; direct mode allows "
                         f"at most {MAX_DIRECT_PARAMS}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)

    def objective(vec):
        trace = brnn_forward_batch(template.from_vector(vec), X)
        return float(batch_cross_entropy(trace.probs, y).mean())

    co = CuttlefishConfig(dim=template.size, lower=-bound, upper=bound,
                          pop_size=search.pop_size, group_fractions=search.group_fractions,
                          q1=search.q1, q2=search.q2, u1=search.u1, u2=search.u2,
                          budget=search.budget, seed=derive_seed(seed, "direct-weights"))
    result = cf_optimize(co, objective)
    return template.from_vector(result.best_point), result


def evaluate_model(model, test):
    """Metric report of ``model`` on ``test``."""
    if (test.height, test.width) != (model.height, model.width) or test.n_classes != model.n_classes:
        raise UsageError("test data geometry does not match the model")
    probs = model.predict_proba(test.images)
    preds = np.argmax(probs, axis=1)
    return classification_report(test.labels, preds, model.n_classes, probs)


def config_digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class COBRNNClassifier(ClassifierMixin, BaseEstimator):
    """Estimator front end for :func:`train_co_brnn` on (n, H, W) images.

    A stratified ``val_ratio`` share of the training data is held out for
    the hyperparameter search; the final model is refit on all of it.
    """

    def __init__(self, pop_size=10, co_budget=60, search_epochs=30, epochs=40, batch=10,
                 val_ratio=0.3, preprocess_mode="minmax", denoise_window=1, seed=0):
        self.pop_size = pop_size
        self.co_budget = co_budget
        self.search_epochs = search_epochs
        self.epochs = epochs
        self.batch = batch
        self.val_ratio = val_ratio
        self.preprocess_mode = preprocess_mode
        self.denoise_window = denoise_window
        self.seed = seed

    def fit(self, X, y):
        X = check_images(X)
        self.classes_, y_enc = np.unique(np.asarray(y), return_inverse=True)
        ds = Dataset(np.clip(X, 0.0, 1.0), y_enc, len(self.classes_))
        train, val = split(ds, SplitSpec(1.0 - self.val_ratio, True,
                                         derive_seed(self.seed, "val-split")))
        inner = InnerConfig(search_epochs=self.search_epochs, epochs=self.epochs,
                            batch=self.batch,
                            preprocess=PreprocessConfig(self.preprocess_mode, self.denoise_window))
        self.model_, self.search_log_ = train_co_brnn(
            train, val, SearchConfig(pop_size=self.pop_size, budget=self.co_budget), inner,
            self.seed)
        self.n_features_in_ = X.shape[1] * X.shape[2]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict_proba(X)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
