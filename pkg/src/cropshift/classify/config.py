"""Uniform configuration and fitting entry point for the base classifiers."""

import dataclasses
from dataclasses import dataclass, field

from cropshift.classify.forest import ForestParams, rf_fit
from cropshift.classify.lda import DEFAULT_RIDGE, lda_fit
from cropshift.dataset import Dataset
from cropshift.errors import InvalidParams

CLASSIFIER_KINDS = ("lda", "rf")


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "lda"
    ridge: float = DEFAULT_RIDGE
    forest_params: ForestParams = field(default_factory=ForestParams)
    workers: int = 1

    def __post_init__(self):
        if self.kind not in CLASSIFIER_KINDS:
            raise InvalidParams(f"classifier must be one of {CLASSIFIER_KINDS}")
        if self.ridge < 0:
            raise InvalidParams("ridge must be nonnegative")
        if self.workers < 1:
            raise InvalidParams("workers must be >= 1")


def fit_classifier(train: Dataset, config: ClassifierConfig, seed: int):
    """Fit the configured classifier; `seed` feeds the forest only."""
    if config.kind == "lda":
        return lda_fit(train, ridge=config.ridge)
    params = dataclasses.replace(config.forest_params, seed=seed)
    return rf_fit(train, params, workers=config.workers)
