"""Prior-shift and feature-shift adjustment for cross-region transfer.

Prior shift adjustment (PSA) reweights a classifier's posterior for each
class by the ratio of that class's prevalence in the target region over its
prevalence in the training data, then renormalizes; the argmax of the result
is the adjusted label. Feature shift adjustment (FSA) models the mean feature
vector of region r and class k as the sum of a regional offset and a class
effect, estimates the offset of an unlabeled region from its overall feature
mean and known class proportions, and subtracts it before classification.
Their composition is FPSA.
"""

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from cropshift.dataset import ClassPriors, Dataset, predict_label
from cropshift.errors import (
    AllZeroAreas,
    AllZeroScores,
    ClassMismatch,
    DimensionMismatch,
    EmptyClass,
    ZeroMeanFieldArea,
    ZeroTrainPrior,
)


@dataclass(frozen=True)
class ClassMeans:
    """Per-class mean feature vectors estimated on the training region."""

    class_list: tuple
    means: np.ndarray  # (K, d)

    def __post_init__(self):
        object.__setattr__(self, "class_list", tuple(self.class_list))
        m = np.asarray(self.means, dtype=np.float64)
        object.__setattr__(self, "means", m)
        if m.ndim != 2 or m.shape[0] != len(self.class_list):
            raise ClassMismatch("one mean row per class required")
        if not np.all(np.isfinite(m)):
            raise ValueError("class means must be finite")


@dataclass(frozen=True)
class RegionalShift:
    """Additive feature offset of one region; zero for the training region."""

    region_id: str
    offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "offset", np.asarray(self.offset, dtype=np.float64)
        )

    def negate(self) -> "RegionalShift":
        return RegionalShift(self.region_id, -self.offset)


def psa_reweight(
    posteriors: np.ndarray, train_priors: ClassPriors, test_priors: ClassPriors
) -> np.ndarray:
    """Reweight posteriors by test/train prior ratios and renormalize.

    Accepts a single vector or a matrix with one posterior row per sample.
    Renormalization does not move the argmax; it keeps the output a valid
    posterior vector for further composition.
    """
    if set(train_priors.classes) != set(test_priors.classes):
        raise ClassMismatch("train and test priors cover different classes")
    class_list = train_priors.classes
    train = train_priors.as_vector(class_list)
    test = test_priors.as_vector(class_list)
    zero_train = [c for c, v in zip(class_list, train) if v == 0]
    if zero_train:
        raise ZeroTrainPrior(
            f"classes absent from training priors: {zero_train}; "
            "reweighting toward them is undefined"
        )
    p = np.asarray(posteriors, dtype=np.float64)
    if p.shape[-1] != len(class_list):
        raise ClassMismatch(
            f"posterior length {p.shape[-1]} does not match {len(class_list)} classes"
        )
    weighted = p * (test / train)
    total = weighted.sum(axis=-1, keepdims=True)
    if np.any(total == 0):
        raise AllZeroScores("all reweighted posterior mass vanished; argmax undefined")
    return weighted / total


def estimate_class_means(train: Dataset) -> ClassMeans:
    """Arithmetic mean feature vector of each class in the training data."""
    counts = train.class_counts()
    empty = [c for c, n in zip(train.class_list, counts) if n == 0]
    if empty:
        raise EmptyClass(f"no training samples for classes: {empty}")
    codes = train.label_codes()
    means = np.empty((len(train.class_list), train.n_features))
    for k in range(len(train.class_list)):
        means[k] = train.features[codes == k].mean(axis=0)
    return ClassMeans(train.class_list, means)


def estimate_regional_shift(
    test_feature_mean: np.ndarray,
    test_priors: ClassPriors,
    means: ClassMeans,
    region_id: Optional[str] = None,
) -> RegionalShift:
    """Regional offset: observed mean minus the prior-weighted class means.

    The observed mean is computed over all (unlabeled) feature vectors of the
    target region; the class proportions come from aggregate statistics.
    """
    if set(test_priors.classes) != set(means.class_list):
        raise ClassMismatch("priors and class means cover different classes")
    mean = np.asarray(test_feature_mean, dtype=np.float64)
    if mean.shape != (means.means.shape[1],):
        raise DimensionMismatch(
            f"feature mean of length {mean.shape} does not match {means.means.shape[1]}"
        )
    p = test_priors.as_vector(means.class_list)
    offset = mean - p @ means.means
    return RegionalShift(region_id or test_priors.region_id, offset)


def fsa_transform(x: np.ndarray, shift: RegionalShift) -> np.ndarray:
    """Remove the estimated regional offset from one or more feature vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != shift.offset.shape[0]:
        raise DimensionMismatch(
            f"feature length {x.shape[-1]} does not match offset length "
            f"{shift.offset.shape[0]}"
        )
    return x - shift.offset


def fpsa_classify(
    model,
    x: np.ndarray,
    shift: RegionalShift,
    train_priors: ClassPriors,
    test_priors: ClassPriors,
) -> str:
    """Label after both adjustments: argmax of reweighted posteriors at x - offset."""
    adjusted = fsa_transform(np.asarray(x, dtype=np.float64), shift)
    p = model.posteriors(adjusted)
    reweighted = psa_reweight(p, train_priors, test_priors)
    return predict_label(reweighted, tuple(train_priors.classes))


def aggregate_to_priors(
    areas: Mapping[str, float],
    mean_field_areas: Optional[Mapping[str, float]] = None,
    region_id: str = "",
) -> ClassPriors:
    """Convert aggregate crop areas into class priors.

    Dividing each class's total area by its average field area estimates a
    field count; normalized counts are the priors. Passing no field areas
    treats the areas as counts directly (the pixel-level case, where priors
    are proportional to total crop area).
    """
    if not areas:
        raise AllZeroAreas("no classes given")
    classes = tuple(areas)
    counts = np.empty(len(classes))
    for i, cls in enumerate(classes):
        area = float(areas[cls])
        if area < 0:
            raise ValueError(f"negative area for class {cls!r}")
        if mean_field_areas is None:
            counts[i] = area
            continue
        mfa = float(mean_field_areas.get(cls, 0.0))
        if area > 0 and mfa <= 0:
            raise ZeroMeanFieldArea(
                f"class {cls!r} has positive area but no positive mean field area"
            )
        counts[i] = area / mfa if area > 0 else 0.0
    total = counts.sum()
    if total <= 0:
        raise AllZeroAreas("every class has zero area; priors undefined")
    return ClassPriors(region_id, classes, counts / total)
