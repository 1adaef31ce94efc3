"""Cuttlefish-optimised bidirectional RNN for scene classification."""

from .baseline import SoftmaxRegression
from .brnn import BRNNClassifier, BrnnConfig, BrnnParams
from .cuttlefish import CuttlefishConfig, CuttlefishOptimizer, cf_optimize
from .dataset import AID, Dataset, SplitSpec, generate_synthetic, load_scenes, save_scenes, split
from .exceptions import ConfigError, FormatError, NumericError, UsageError
from .metrics import MetricsReport, confusion, derive_metrics
from .pca import PrincipalComponents, RowPCA, pca_fit
from .pipeline import COBRNNClassifier, TrainedModel, evaluate_model, train_co_brnn
from .preprocess import PatchPreprocessor, PreprocessConfig

__version__ = "0.1.0"

__all__ = [
    "AID", "BRNNClassifier", "BrnnConfig", "BrnnParams", "COBRNNClassifier", "ConfigError",
    "CuttlefishConfig", "CuttlefishOptimizer", "Dataset", "FormatError", "MetricsReport",
    "NumericError", "PatchPreprocessor", "PreprocessConfig", "PrincipalComponents", "RowPCA",
    "SoftmaxRegression", "SplitSpec", "TrainedModel", "UsageError", "cf_optimize", "confusion",
    "derive_metrics", "evaluate_model", "generate_synthetic", "load_scenes", "pca_fit",
    "save_scenes", "split", "train_co_brnn",
]
