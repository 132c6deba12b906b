"""Random forest with bootstrapped CART trees and Gini impurity splits.

Each tree draws N bootstrap samples and, at every node, searches a fresh
uniform subset of features for the best threshold. Per-tree RNG streams are
derived from (seed, tree index), so fitting is reproducible and trees may be
built in parallel with results identical to sequential execution.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from cropshift.classify._split import best_split_node
from cropshift.dataset import Dataset
from cropshift.errors import DimensionMismatch, InvalidParams
from cropshift.rng import rng_from

LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    features_per_split: Optional[int] = None  # None -> ceil(sqrt(d))
    min_leaf: int = 1
    max_depth: Optional[int] = None  # None -> unlimited
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidParams("n_trees must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise InvalidParams("features_per_split must be >= 1")
        if self.min_leaf < 1:
            raise InvalidParams("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidParams("max_depth must be >= 1 or None")

    def resolve_features_per_split(self, n_features: int) -> int:
        m = self.features_per_split
        if m is None:
            m = math.ceil(math.sqrt(n_features))
        if m > n_features:
            raise InvalidParams(
                f"features_per_split {m} exceeds feature count {n_features}"
            )
        return m


@dataclass
class Tree:
    """Flat array representation; children of node i are left[i]/right[i]."""

    feature: np.ndarray  # int32, LEAF for leaves
    threshold: np.ndarray  # float64, nan for leaves
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    counts: np.ndarray  # int64 (n_nodes, K) class counts of each node
    majority: np.ndarray = field(init=False)  # int32, argmax of counts

    def __post_init__(self):
        self.majority = np.argmax(self.counts, axis=1).astype(np.int32)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for every row of X."""
        node = np.zeros(len(X), dtype=np.int32)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, feat[rows]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])


@dataclass
class ForestModel:
    trees: list
    params: ForestParams
    class_list: tuple
    n_features: int

    def posteriors(self, x):
        return rf_posteriors(self, x)

    def posterior_matrix(self, X):
        return rf_posterior_matrix(self, X)


def _grow_tree(X, y, n_classes, m_features, min_leaf, max_depth, rng):
    """Build one tree on (X, y); X is the bootstrap-gathered matrix."""
    n, d = X.shape
    feature, threshold = [], []
    left, right, counts_rows = [], [], []
    # stack entries: (row indices, depth, parent node id, is_left_child)
    stack = [(np.arange(n, dtype=np.int64), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node_id = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = node_id
            else:
                right[parent] = node_id
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.int64)
        feature.append(LEAF)
        threshold.append(np.nan)
        left.append(LEAF)
        right.append(LEAF)
        counts_rows.append(counts)

        n_node = len(idx)
        if (
            counts.max() == n_node
            or n_node < 2 * min_leaf
            or (max_depth is not None and depth >= max_depth)
        ):
            continue
        feats = np.sort(rng.choice(d, size=m_features, replace=False)).astype(np.int64)
        parent_score = int(np.sum(counts * counts)) / n_node
        j, thr = best_split_node(
            X, idx, feats, y, n_classes, min_leaf, parent_score, counts
        )
        if j < 0:
            continue
        f = int(feats[j])
        feature[node_id] = f
        threshold[node_id] = thr
        go_left = X[idx, f] <= thr
        # push right first so the left child is materialized at parent+1
        stack.append((idx[~go_left], depth + 1, node_id, False))
        stack.append((idx[go_left], depth + 1, node_id, True))
    return Tree(
        np.array(feature, dtype=np.int32),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.vstack(counts_rows),
    )


def _fit_one_tree(X, codes, n_classes, m_features, params, tree_index):
    rng = rng_from(params.seed, tree_index)
    n = len(X)
    boot = rng.integers(0, n, size=n)
    Xb = np.ascontiguousarray(X[boot])
    yb = codes[boot]
    return _grow_tree(
        Xb, yb, n_classes, m_features, params.min_leaf, params.max_depth, rng
    )


def rf_fit(data: Dataset, params: ForestParams, workers: int = 1) -> ForestModel:
    """Fit a forest; identical output for any worker count."""
    if len(data) < 2:
        raise InvalidParams("need at least 2 samples to fit a forest")
    if workers < 1:
        raise InvalidParams("workers must be >= 1")
    X = data.features
    codes = data.label_codes()
    n_classes = len(data.class_list)
    m_features = params.resolve_features_per_split(data.n_features)

    if workers == 1:
        trees = [
            _fit_one_tree(X, codes, n_classes, m_features, params, t)
            for t in range(params.n_trees)
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(
                pool.map(
                    lambda t: _fit_one_tree(X, codes, n_classes, m_features, params, t),
                    range(params.n_trees),
                )
            )
    return ForestModel(trees, params, data.class_list, data.n_features)


def rf_posterior_matrix(model: ForestModel, X) -> np.ndarray:
    """Per-class vote proportions for each row of X."""
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"got {X.shape[1]} features, model expects {model.n_features}"
        )
    n_classes = len(model.class_list)
    votes = np.zeros((len(X), n_classes), dtype=np.int64)
    rows = np.arange(len(X))
    for tree in model.trees:
        leaf = tree.apply(X)
        votes[rows, tree.majority[leaf]] += 1
    return votes / float(len(model.trees))


def rf_posteriors(model: ForestModel, x) -> np.ndarray:
    """Vote-proportion posterior for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("rf_posteriors expects a single feature vector")
    return rf_posterior_matrix(model, x[None, :])[0]
