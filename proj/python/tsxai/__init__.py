"""FCN time-series classifiers with class activation maps and deep-ensemble relevance."""

from tsxai._core import (
    Architecture,
    Ensemble,
    Error,
    Model,
    ParseError,
    ShapeError,
    StateError,
    TrainingError,
    ValueError,
    aggregate_relevance,
    classification_metrics,
    permutation_test,
    relevance_accuracy,
    relevance_consistency,
    relevance_ratio,
    synthetic,
    top_k,
    train,
    train_ensemble,
)

__all__ = [
    "Architecture",
    "Ensemble",
    "Error",
    "Model",
    "ParseError",
    "ShapeError",
    "StateError",
    "TrainingError",
    "ValueError",
    "aggregate_relevance",
    "classification_metrics",
    "permutation_test",
    "relevance_accuracy",
    "relevance_consistency",
    "relevance_ratio",
    "synthetic",
    "top_k",
    "train",
    "train_ensemble",
]
