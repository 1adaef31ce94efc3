"""Confusion matrices and the multiclass metric battery.

Per-class values are one-vs-rest; aggregates are unweighted macro averages,
except the aggregate F-score, which is the harmonic mean of macro precision
and macro recall.  A 0/0 ratio is reported as 0 and flagged in ``undefined``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_labels
from .exceptions import UsageError

# Headline figures reported for the full-scale AID experiment.  Kept for
# annotating reports; desk-scale runs are never compared against them.
PAPER_REFERENCE = {
    "dataset": "AID",
    "accuracy": 0.97,
    "sensitivity": 0.95,
    "specificity": 0.93,
    "rmse": 0.8,
    "mae": 0.9,
    "precision": 0.891,
    "recall": 0.9403,
    "f_score": 0.9261,
}

STOCHASTIC_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    counts: np.ndarray

    @property
    def n_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)


def confusion(y_true, y_pred, n_classes):
    """``counts[t, p]`` = number of samples with true class t predicted as p."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise UsageError("true and predicted labels differ in length")
    if y_true.size == 0:
        raise UsageError("need at least one scored sample")
    y_true = check_labels(y_true, n_classes, name="y_true")
    y_pred = check_labels(y_pred, n_classes, name="y_pred")
    counts = np.bincount(y_true * n_classes + y_pred, minlength=n_classes * n_classes)
    return ConfusionMatrix(counts.reshape(n_classes, n_classes).astype(np.int64))


def _ratio(num, den):
    return (num / den, False) if den else (0.0, True)


@dataclass
class MetricsReport:
    confusion: ConfusionMatrix
    accuracy: float
    sensitivity: float
    specificity: float
    precision: float
    recall: float
    f_score: float
    rmse: float = None
    mae: float = None
    per_class: list = field(default_factory=list)

    def to_dict(self):
        scalars = {k: getattr(self, k) for k in
                   ("accuracy", "sensitivity", "specificity", "precision", "recall", "f_score")}
        if self.rmse is not None:
            scalars["rmse"] = self.rmse
            scalars["mae"] = self.mae
        return {
            "metrics": scalars,
            "per_class": self.per_class,
            "confusion": self.confusion.counts.tolist(),
            "paper_reference": PAPER_REFERENCE,
        }


def derive_metrics(cm, probs=None, y_true=None):
    """Build a :class:`MetricsReport` from a confusion matrix.

    ``probs`` (N x C, row-stochastic) together with ``y_true`` add RMSE and
    MAE measured between the predicted distributions and one-hot targets.
    """
    counts = np.asarray(cm.counts, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        raise UsageError("confusion matrix is empty")
    c = counts.shape[0]
    per_class = []
    for k in range(c):
        tp = int(counts[k, k])
        fn = int(counts[k].sum()) - tp
        fp = int(counts[:, k].sum()) - tp
        tn = total - tp - fn - fp
        sens, u_sens = _ratio(tp, tp + fn)
        spec, u_spec = _ratio(tn, tn + fp)
        prec, u_prec = _ratio(tp, tp + fp)
        f1, u_f1 = _ratio(2 * prec * sens, prec + sens)
        undefined = [name for name, flag in
                     (("sensitivity", u_sens), ("specificity", u_spec),
                      ("precision", u_prec), ("f_score", u_f1)) if flag]
        per_class.append({
            "class": k, "tp": tp, "fp": fp, "fn": fn, "tn": tn,
            "sensitivity": sens, "recall": sens, "specificity": spec,
            "precision": prec, "f_score": f1, "undefined": undefined,
        })

    def macro(key):
        return float(np.mean([row[key] for row in per_class]))

    sensitivity = macro("sensitivity")
    precision = macro("precision")
    f_score, _ = _ratio(2 * precision * sensitivity, precision + sensitivity)
    report = MetricsReport(
        confusion=ConfusionMatrix(counts),
        accuracy=int(np.trace(counts)) / total,
        sensitivity=sensitivity,
        specificity=macro("specificity"),
        precision=precision,
        recall=sensitivity,
        f_score=f_score,
        per_class=per_class,
    )
    if probs is not None:
        probs = np.asarray(probs, dtype=np.float64)
        if y_true is None:
            raise UsageError("probabilities need the true labels")
        y_true = check_labels(y_true, c, n_samples=probs.shape[0])
        if probs.ndim != 2 or probs.shape[1] != c:
            raise UsageError(f"probs must have shape (N, {c})")
        if (not np.all(np.isfinite(probs)) or probs.min() < 0
                or np.abs(probs.sum(axis=1) - 1.0).max() > STOCHASTIC_TOL):
            raise UsageError("every probability row must be a distribution")
        diff = probs - np.eye(c)[y_true]
        report.rmse = float(np.sqrt(np.mean(diff ** 2)))
        report.mae = float(np.mean(np.abs(diff)))
    return report


def classification_report(y_true, y_pred, n_classes, probs=None):
    return derive_metrics(confusion(y_true, y_pred, n_classes), probs, y_true if probs is not None else None)
