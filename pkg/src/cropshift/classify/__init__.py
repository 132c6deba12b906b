"""Base classifiers exposing per-class posterior probabilities."""

from cropshift.classify._split import BACKEND as SPLIT_BACKEND
from cropshift.classify.config import ClassifierConfig, fit_classifier
from cropshift.classify.forest import (
    ForestModel,
    ForestParams,
    rf_fit,
    rf_posterior_matrix,
    rf_posteriors,
)
from cropshift.classify.lda import (
    DEFAULT_RIDGE,
    LdaModel,
    lda_fit,
    lda_posterior_matrix,
    lda_posteriors,
)
from cropshift.dataset import Dataset, predict_label, predict_labels

__all__ = [
    "SPLIT_BACKEND",
    "ClassifierConfig",
    "Dataset",
    "DEFAULT_RIDGE",
    "fit_classifier",
    "ForestModel",
    "ForestParams",
    "LdaModel",
    "lda_fit",
    "lda_posterior_matrix",
    "lda_posteriors",
    "predict_label",
    "predict_labels",
    "rf_fit",
    "rf_posterior_matrix",
    "rf_posteriors",
]
