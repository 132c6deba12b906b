"""Core data containers: labeled feature datasets and per-region class priors."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from cropshift.errors import ClassMismatch, DimensionMismatch, UnknownLabel

# Tolerance for "proportions sum to one" on constructed priors.
PRIOR_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ClassPriors:
    """Class-probability vector for one region.

    `classes` fixes the ordering; `values` holds the matching probabilities.
    """

    region_id: str
    classes: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or len(vals) != len(self.classes):
            raise ClassMismatch("priors vector length does not match class list")
        if len(self.classes) != len(set(self.classes)):
            raise ClassMismatch("duplicate class names in priors")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("prior proportions must be finite and nonnegative")
        if abs(float(vals.sum()) - 1.0) > PRIOR_SUM_TOL:
            raise ValueError(
                f"prior proportions for region {self.region_id!r} sum to "
                f"{float(vals.sum())!r}, not 1"
            )

    @property
    def proportions(self) -> dict:
        return dict(zip(self.classes, (float(v) for v in self.values)))

    def as_vector(self, class_list: Sequence[str]) -> np.ndarray:
        """Reorder the probabilities to follow `class_list`."""
        if set(class_list) != set(self.classes):
            raise ClassMismatch(
                f"priors for region {self.region_id!r} cover {sorted(self.classes)}, "
                f"expected {sorted(class_list)}"
            )
        index = {c: i for i, c in enumerate(self.classes)}
        return self.values[[index[c] for c in class_list]]

    @staticmethod
    def from_proportions(region_id: str, proportions: dict) -> "ClassPriors":
        classes = tuple(proportions)
        values = np.array([proportions[c] for c in classes], dtype=np.float64)
        return ClassPriors(region_id, classes, values)


@dataclass
class Dataset:
    """A labeled feature matrix with region and optional group annotations."""

    features: np.ndarray
    labels: np.ndarray
    regions: np.ndarray
    class_list: tuple
    group_ids: Optional[np.ndarray] = None
    _codes: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=object)
        self.regions = np.asarray(self.regions, dtype=object)
        self.class_list = tuple(self.class_list)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n = self.features.shape[0]
        if n < 1 or self.features.shape[1] < 1:
            raise ValueError("dataset must have at least one sample and one feature")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite entries")
        if len(self.labels) != n or len(self.regions) != n:
            raise ValueError("labels/regions length does not match feature rows")
        if self.group_ids is not None:
            self.group_ids = np.asarray(self.group_ids, dtype=object)
            if len(self.group_ids) != n:
                raise ValueError("group_ids length does not match feature rows")
        known = set(self.class_list)
        for lab in self.labels:
            if lab not in known:
                raise UnknownLabel(f"label {lab!r} not in class list {sorted(known)}")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def label_codes(self) -> np.ndarray:
        """Labels as int32 indices into class_list (cached)."""
        if self._codes is None:
            index = {c: i for i, c in enumerate(self.class_list)}
            self._codes = np.array([index[l] for l in self.labels], dtype=np.int32)
        return self._codes

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.label_codes(), minlength=len(self.class_list)).astype(np.int64)

    def empirical_priors(self, region_id: str = "") -> ClassPriors:
        counts = self.class_counts()
        return ClassPriors(region_id, self.class_list, counts / counts.sum())

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(
            self.features[indices],
            self.labels[indices],
            self.regions[indices],
            self.class_list,
            None if self.group_ids is None else self.group_ids[indices],
        )

    def split_by_region(self) -> dict:
        """Partition rows by region id, preserving order within each region."""
        out = {}
        for rid in dict.fromkeys(self.regions):  # first-appearance order
            out[rid] = self.subset(np.flatnonzero(self.regions == rid))
        return out


def predict_label(posteriors, class_list) -> str:
    """Argmax class name; ties resolve to the lowest class index."""
    p = np.asarray(posteriors, dtype=np.float64)
    if p.ndim != 1 or len(p) != len(class_list):
        raise DimensionMismatch(
            f"posterior vector of shape {p.shape} does not match {len(class_list)} classes"
        )
    return class_list[int(np.argmax(p))]


def predict_labels(posterior_matrix, class_list) -> np.ndarray:
    """Row-wise argmax class names for a posterior matrix."""
    p = np.asarray(posterior_matrix, dtype=np.float64)
    idx = np.argmax(p, axis=1)
    classes = np.asarray(class_list, dtype=object)
    return classes[idx]
