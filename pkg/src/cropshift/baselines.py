"""Comparison methods: SMOTE rebalancing, per-region z-transformation,
their composed pipelines, and the guess-major-class baseline.

The rebalancing rule is pinned for reproducibility: total size is preserved,
per-class targets come from largest-remainder rounding, surplus classes are
undersampled without replacement, and deficit classes are augmented with
synthetic points on segments between a member and one of its k nearest
same-class neighbors.
"""

from dataclasses import dataclass

import numpy as np

from cropshift.classify import predict_labels
from cropshift.classify.config import fit_classifier
from cropshift.dataset import ClassPriors, Dataset
from cropshift.errors import InsufficientData, SmoteInfeasible
from cropshift.rng import derive_seed
from cropshift.shift import psa_reweight

DEFAULT_SMOTE_K = 5


@dataclass(frozen=True)
class ZTransform:
    """Per-feature standardization statistics of one region (population std)."""

    mean: np.ndarray
    std: np.ndarray

    @property
    def zero_variance(self) -> np.ndarray:
        return self.std == 0


@dataclass(frozen=True)
class ResamplePlan:
    classes: tuple
    current: np.ndarray  # int64 counts per class
    target: np.ndarray  # int64 counts per class, sums to the original total
    k: int


def largest_remainder_counts(total: int, proportions: np.ndarray) -> np.ndarray:
    """Integer targets summing to `total`, apportioned by largest remainder.

    Remainder ties go to the lowest class index.
    """
    raw = total * np.asarray(proportions, dtype=np.float64)
    base = np.floor(raw).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        remainders = raw - base
        order = np.lexsort((np.arange(len(raw)), -remainders))
        base[order[:short]] += 1
    return base


def plan_resample(train: Dataset, target_priors: ClassPriors, k: int) -> ResamplePlan:
    if k < 1:
        raise SmoteInfeasible("neighbor count k must be >= 1")
    target_vec = target_priors.as_vector(train.class_list)
    current = train.class_counts()
    target = largest_remainder_counts(len(train), target_vec)
    infeasible = [
        c
        for c, prior, have in zip(train.class_list, target_vec, current)
        if prior > 0 and have < k + 1
    ]
    if infeasible:
        raise SmoteInfeasible(
            f"classes with positive target prior but fewer than k+1={k + 1} "
            f"samples: {infeasible}"
        )
    return ResamplePlan(train.class_list, current, target, k)


def _knn_table(points: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest same-class neighbors of every point.

    Euclidean distance; ties resolve to the lower sample index; a point is
    never its own neighbor, but duplicates of it are eligible.
    """
    m = len(points)
    diff = points[:, None, :] - points[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    table = np.empty((m, k), dtype=np.int64)
    for i in range(m):
        order = np.argsort(d2[i], kind="stable")
        order = order[order != i]
        table[i] = order[:k]
    return table


def smote_resample(
    train: Dataset, target_priors: ClassPriors, k: int = DEFAULT_SMOTE_K, seed: int = 0
) -> Dataset:
    """Rebalance the training set to the target label distribution.

    Returns the input unchanged when the plan is zero-delta. Retained
    original rows keep their input order; synthetic rows follow, grouped by
    class in class-list order.
    """
    plan = plan_resample(train, target_priors, k)
    if np.array_equal(plan.current, plan.target):
        return train
    rng = np.random.default_rng(seed)
    codes = train.label_codes()
    keep = np.ones(len(train), dtype=bool)
    synth_rows = []
    synth_labels = []
    synth_regions = []
    for ci, cls in enumerate(train.class_list):
        members = np.flatnonzero(codes == ci)
        have = len(members)
        want = int(plan.target[ci])
        if want < have:
            kept_local = np.sort(rng.choice(have, size=want, replace=False))
            dropped = np.ones(have, dtype=bool)
            dropped[kept_local] = False
            keep[members[dropped]] = False
        elif want > have:
            points = train.features[members]
            neighbors = _knn_table(points, k)
            for _ in range(want - have):
                i = int(rng.integers(have))
                j = int(rng.integers(k))
                u = float(rng.random())
                x = points[i]
                x_near = points[neighbors[i, j]]
                synth_rows.append(x + u * (x_near - x))
                synth_labels.append(cls)
                synth_regions.append(train.regions[members[i]])
    features = train.features[keep]
    labels = list(train.labels[keep])
    regions = list(train.regions[keep])
    if synth_rows:
        features = np.vstack([features, np.array(synth_rows)])
        labels += synth_labels
        regions += synth_regions
    return Dataset(features, labels, regions, train.class_list)


def ztransform_fit(data) -> ZTransform:
    """Standardization statistics; accepts a Dataset or a feature matrix."""
    X = data.features if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if len(X) < 2:
        raise InsufficientData("z-transform needs at least 2 samples")
    return ZTransform(X.mean(axis=0), X.std(axis=0))


def ztransform_apply(zt: ZTransform, x: np.ndarray) -> np.ndarray:
    """(x - mean) / std per feature; zero-variance features map to 0."""
    x = np.asarray(x, dtype=np.float64)
    safe = np.where(zt.zero_variance, 1.0, zt.std)
    out = (x - zt.mean) / safe
    if zt.zero_variance.any():
        out = np.where(zt.zero_variance, 0.0, out)
    return out


def ztransform_invert(zt: ZTransform, z: np.ndarray) -> np.ndarray:
    """Inverse of apply on non-degenerate features; degenerate map to the mean."""
    z = np.asarray(z, dtype=np.float64)
    return np.where(zt.zero_variance, zt.mean, z * zt.std + zt.mean)


def major_class_classify(test_priors: ClassPriors) -> str:
    """The class with the highest prior; ties go to the lowest class index."""
    return test_priors.classes[int(np.argmax(test_priors.values))]


def _fit_and_posteriors(train: Dataset, test_features: np.ndarray, config, seed: int):
    """Fit the configured base classifier and return test posteriors."""
    return fit_classifier(train, config, seed).posterior_matrix(test_features)


def pipeline_smote_psa(
    train: Dataset, test_features, test_priors: ClassPriors, config, seed: int,
    k: int = DEFAULT_SMOTE_K,
) -> np.ndarray:
    """Rebalance to test priors, fit, predict with plain argmax.

    Training data already matches the target label distribution after
    rebalancing, so no posterior reweighting is applied.
    """
    test_features = np.asarray(test_features, dtype=np.float64)
    resampled = smote_resample(train, test_priors, k=k, seed=derive_seed(seed, 0))
    p = _fit_and_posteriors(resampled, test_features, config, derive_seed(seed, 1))
    return predict_labels(p, train.class_list)


def pipeline_zt_fpsa(
    train: Dataset, test_features, test_priors: ClassPriors, config, seed: int
) -> np.ndarray:
    """z-transform each region independently, fit, then reweight priors."""
    test_features = np.asarray(test_features, dtype=np.float64)
    zt_train = ztransform_fit(train)
    zt_test = ztransform_fit(test_features)
    train_z = Dataset(
        ztransform_apply(zt_train, train.features),
        train.labels,
        train.regions,
        train.class_list,
        train.group_ids,
    )
    p = _fit_and_posteriors(
        train_z, ztransform_apply(zt_test, test_features), config, derive_seed(seed, 1)
    )
    reweighted = psa_reweight(p, train.empirical_priors(), test_priors)
    return predict_labels(reweighted, train.class_list)


def pipeline_zt_smote_fpsa(
    train: Dataset, test_features, test_priors: ClassPriors, config, seed: int,
    k: int = DEFAULT_SMOTE_K,
) -> np.ndarray:
    """Rebalance to test priors, z-transform each side, fit, plain argmax."""
    test_features = np.asarray(test_features, dtype=np.float64)
    resampled = smote_resample(train, test_priors, k=k, seed=derive_seed(seed, 0))
    zt_train = ztransform_fit(resampled)
    zt_test = ztransform_fit(test_features)
    train_z = Dataset(
        ztransform_apply(zt_train, resampled.features),
        resampled.labels,
        resampled.regions,
        resampled.class_list,
    )
    p = _fit_and_posteriors(
        train_z, ztransform_apply(zt_test, test_features), config, derive_seed(seed, 1)
    )
    return predict_labels(p, train.class_list)
