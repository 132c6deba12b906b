"""Confusion-matrix metrics, the train-on-one/test-on-rest harness,
group-aware cross-validation, and the class-diversity diagnostic.

Matrix orientation is pinned: rows are true classes, columns predictions.
Producer's accuracy is per-class recall, user's accuracy per-class precision.
Undefined ratios (zero denominators) are reported as absent values, never 0;
a class with undefined F1 contributes 0 to the macro average and is flagged.
"""

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from cropshift.baselines import (
    major_class_classify,
    pipeline_smote_psa,
    pipeline_zt_fpsa,
    pipeline_zt_smote_fpsa,
)
from cropshift.classify import ClassifierConfig, fit_classifier, predict_labels
from cropshift.dataset import ClassPriors, Dataset
from cropshift.errors import (
    ClassMismatch,
    CropshiftError,
    EmptyMatrix,
    LengthMismatch,
    MissingPriors,
    TooFewGroups,
    TrainRegionMissingClass,
    UnknownLabel,
)
from cropshift.rng import derive_seed, rng_from
from cropshift.shift import estimate_class_means, estimate_regional_shift, psa_reweight

METHODS = (
    "gmc",
    "uat",
    "psa",
    "fsa",
    "fpsa",
    "smote-psa",
    "zt-fpsa",
    "zt-smote-fpsa",
)


@dataclass
class ConfusionMatrix:
    class_list: tuple
    counts: np.ndarray  # (K, K) int64, rows true, columns predicted

    def __post_init__(self):
        self.class_list = tuple(self.class_list)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.class_list)
        if self.counts.shape != (k, k):
            raise ClassMismatch("confusion counts must be K x K")
        if np.any(self.counts < 0):
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.class_list != other.class_list:
            raise ClassMismatch("cannot add confusion matrices over different classes")
        return ConfusionMatrix(self.class_list, self.counts + other.counts)


@dataclass
class MetricsReport:
    overall_accuracy: float
    producers: dict  # class -> recall or None
    users: dict  # class -> precision or None
    f1: dict  # class -> F1 or None
    macro_f1: float
    undefined_f1_classes: tuple = ()

    def to_jsonable(self) -> dict:
        return {
            "overall_accuracy": self.overall_accuracy,
            "producers_accuracy": self.producers,
            "users_accuracy": self.users,
            "f1": self.f1,
            "macro_f1": self.macro_f1,
            "undefined_f1_classes": list(self.undefined_f1_classes),
        }


@dataclass
class ExperimentResult:
    train_region_id: str
    method: str
    seed: int
    per_region: dict  # region_id -> ConfusionMatrix
    aggregate: ConfusionMatrix
    per_region_metrics: dict = field(init=False)
    aggregate_metrics: MetricsReport = field(init=False)
    shifts: Optional[dict] = None  # region_id -> offset vector, when estimated

    def __post_init__(self):
        self.per_region_metrics = {r: metrics(cm) for r, cm in self.per_region.items()}
        self.aggregate_metrics = metrics(self.aggregate)


def confusion(true_labels, predicted_labels, class_list) -> ConfusionMatrix:
    """Count matrix with rows = true class, columns = predicted class."""
    class_list = tuple(class_list)
    true_labels = list(true_labels)
    predicted_labels = list(predicted_labels)
    if len(true_labels) != len(predicted_labels):
        raise LengthMismatch(
            f"{len(true_labels)} true labels vs {len(predicted_labels)} predictions"
        )
    index = {c: i for i, c in enumerate(class_list)}
    counts = np.zeros((len(class_list), len(class_list)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if t not in index:
            raise UnknownLabel(f"true label {t!r} not in class list")
        if p not in index:
            raise UnknownLabel(f"predicted label {p!r} not in class list")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(class_list, counts)


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Overall, producer's, user's, per-class F1 and macro-F1."""
    if cm.total == 0:
        raise EmptyMatrix("metrics undefined on an empty confusion matrix")
    counts = cm.counts
    diag = np.diag(counts).astype(np.float64)
    row = counts.sum(axis=1).astype(np.float64)
    col = counts.sum(axis=0).astype(np.float64)
    producers, users, f1 = {}, {}, {}
    undefined = []
    f1_values = []
    for i, cls in enumerate(cm.class_list):
        producers[cls] = diag[i] / row[i] if row[i] > 0 else None
        users[cls] = diag[i] / col[i] if col[i] > 0 else None
        if row[i] + col[i] > 0:
            f1[cls] = 2.0 * diag[i] / (row[i] + col[i])
            f1_values.append(f1[cls])
        else:
            f1[cls] = None
            undefined.append(cls)
            f1_values.append(0.0)
    return MetricsReport(
        overall_accuracy=float(diag.sum() / cm.total),
        producers=producers,
        users=users,
        f1=f1,
        macro_f1=float(np.mean(f1_values)),
        undefined_f1_classes=tuple(undefined),
    )


def shannon_entropy(priors: ClassPriors) -> float:
    """Diversity of a class distribution in nats; 0 log 0 reads as 0."""
    total = 0.0
    for p in priors.values:
        if p > 0:
            total -= float(p) * math.log(float(p))
    return total


def _pooled_priors(
    test_regions, priors: Mapping[str, ClassPriors], sizes: Mapping[str, int], class_list
) -> ClassPriors:
    """Size-weighted mixture of the test regions' priors."""
    weights = np.array([sizes[r] for r in test_regions], dtype=np.float64)
    weights /= weights.sum()
    stacked = np.vstack([priors[r].as_vector(class_list) for r in test_regions])
    return ClassPriors("pooled", tuple(class_list), weights @ stacked)


def run_transfer_experiment(
    regions: Mapping[str, Dataset],
    train_region: str,
    method: str,
    priors: Optional[Mapping[str, ClassPriors]],
    classifier_config: ClassifierConfig = ClassifierConfig(),
    seed: int = 0,
    smote_k: int = 5,
) -> ExperimentResult:
    """Fit on one region, evaluate on every other, and pool the confusions.

    Shift offsets and prior corrections are re-estimated per target region;
    the SMOTE and z-transform pipelines refit the base classifier per target.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if train_region not in regions:
        raise ValueError(f"train region {train_region!r} not among regions")
    class_list = regions[train_region].class_list
    for rid, data in regions.items():
        if data.class_list != class_list:
            raise ClassMismatch(f"region {rid!r} has a different class list")
    train = regions[train_region]
    if np.any(train.class_counts() == 0):
        missing = [
            c for c, n in zip(class_list, train.class_counts()) if n == 0
        ]
        raise TrainRegionMissingClass(
            f"training region {train_region!r} lacks classes {missing}"
        )
    test_regions = sorted(r for r in regions if r != train_region)
    needs_priors = method != "uat"
    if needs_priors:
        if priors is None:
            raise MissingPriors(f"method {method!r} requires per-region priors")
        lacking = [r for r in test_regions if r not in priors]
        if lacking:
            raise MissingPriors(f"no priors for regions {lacking}")

    base_model = None
    if method in ("uat", "psa", "fsa", "fpsa"):
        base_model = fit_classifier(train, classifier_config, derive_seed(seed, 0))
    train_priors = train.empirical_priors(train_region)
    class_means = estimate_class_means(train) if method in ("fsa", "fpsa") else None
    if method == "gmc":
        sizes = {r: len(regions[r]) for r in test_regions}
        guessed = major_class_classify(
            _pooled_priors(test_regions, priors, sizes, class_list)
        )

    per_region = {}
    shifts = {} if method in ("fsa", "fpsa") else None
    for r_index, rid in enumerate(test_regions):
        data = regions[rid]
        X = data.features
        region_seed = derive_seed(seed, 1 + r_index)
        try:
            per_region[rid] = _evaluate_region(
                method, rid, data, X, region_seed, class_list, base_model,
                train, train_priors, class_means, priors, classifier_config,
                smote_k, shifts, guessed if method == "gmc" else None,
            )
        except CropshiftError as exc:
            exc.args = (f"region {rid!r}: {exc}",)
            raise

    aggregate = ConfusionMatrix(
        class_list, sum(cm.counts for cm in per_region.values())
    )
    return ExperimentResult(
        train_region_id=train_region,
        method=method,
        seed=seed,
        per_region=per_region,
        aggregate=aggregate,
        shifts=shifts,
    )


def _evaluate_region(
    method, rid, data, X, region_seed, class_list, base_model, train,
    train_priors, class_means, priors, classifier_config, smote_k, shifts,
    guessed,
):
    """Predictions and confusion for one target region."""
    if method == "gmc":
        predicted = np.full(len(data), guessed, dtype=object)
    elif method == "uat":
        predicted = predict_labels(base_model.posterior_matrix(X), class_list)
    elif method == "psa":
        p = psa_reweight(base_model.posterior_matrix(X), train_priors, priors[rid])
        predicted = predict_labels(p, class_list)
    elif method in ("fsa", "fpsa"):
        shift = estimate_regional_shift(
            X.mean(axis=0), priors[rid], class_means, region_id=rid
        )
        shifts[rid] = shift.offset
        p = base_model.posterior_matrix(X - shift.offset)
        if method == "fpsa":
            p = psa_reweight(p, train_priors, priors[rid])
        predicted = predict_labels(p, class_list)
    elif method == "smote-psa":
        predicted = pipeline_smote_psa(
            train, X, priors[rid], classifier_config, region_seed, k=smote_k
        )
    elif method == "zt-fpsa":
        predicted = pipeline_zt_fpsa(
            train, X, priors[rid], classifier_config, region_seed
        )
    else:  # zt-smote-fpsa
        predicted = pipeline_zt_smote_fpsa(
            train, X, priors[rid], classifier_config, region_seed, k=smote_k
        )
    return confusion(data.labels, predicted, class_list)


def group_fold_assignment(groups, folds: int, rng) -> np.ndarray:
    """Fold index per sample: groups shuffled, dealt round-robin to folds.

    Every sample of a group lands in the same fold.
    """
    groups = np.asarray(groups, dtype=object)
    distinct = list(dict.fromkeys(groups))
    if len(distinct) < folds:
        raise TooFewGroups(f"{len(distinct)} groups, fewer than {folds} folds")
    order = rng.permutation(len(distinct))
    fold_of_group = {distinct[g]: f % folds for f, g in enumerate(order)}
    return np.array([fold_of_group[g] for g in groups])


@dataclass
class OracleCvResult:
    per_region_accuracy: dict  # region_id -> pooled CV accuracy
    region_sizes: dict
    oracle_values: dict  # candidate train region -> weighted accuracy of the rest

    def for_train_region(self, region_id: str) -> float:
        return self.oracle_values[region_id]


def oracle_cv(
    data: Dataset,
    folds: int = 10,
    seed: int = 0,
    classifier_config: ClassifierConfig = ClassifierConfig(),
) -> OracleCvResult:
    """Group-aware cross-validated in-region accuracy, per region.

    Groups (plots) are shuffled with a per-region derived stream and dealt
    round-robin to folds, so no group straddles the fold boundary. The oracle
    value for a candidate training region is the size-weighted mean accuracy
    of the remaining regions.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    per_region_accuracy = {}
    region_sizes = {}
    by_region = data.split_by_region()
    for r_index, (rid, region_data) in enumerate(sorted(by_region.items())):
        region_sizes[rid] = len(region_data)
        if region_data.group_ids is not None:
            groups = region_data.group_ids
        else:
            groups = np.arange(len(region_data))
        try:
            fold_ids = group_fold_assignment(groups, folds, rng_from(seed, r_index))
        except TooFewGroups as exc:
            raise TooFewGroups(f"region {rid!r}: {exc}") from exc
        correct = 0
        for f in range(folds):
            test_mask = fold_ids == f
            train_part = region_data.subset(np.flatnonzero(~test_mask))
            test_part = region_data.subset(np.flatnonzero(test_mask))
            model = fit_classifier(
                train_part, classifier_config, derive_seed(seed, r_index, f)
            )
            predicted = predict_labels(
                model.posterior_matrix(test_part.features), data.class_list
            )
            correct += int(np.sum(predicted == test_part.labels))
        per_region_accuracy[rid] = correct / len(region_data)

    oracle_values = {}
    for rid in per_region_accuracy:
        others = [r for r in per_region_accuracy if r != rid]
        if not others:
            continue
        weights = np.array([region_sizes[r] for r in others], dtype=np.float64)
        accs = np.array([per_region_accuracy[r] for r in others])
        oracle_values[rid] = float(weights @ accs / weights.sum())
    return OracleCvResult(per_region_accuracy, region_sizes, oracle_values)
