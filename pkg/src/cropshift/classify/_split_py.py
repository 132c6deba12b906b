"""Pure-numpy best-split search; reference twin of the compiled kernel.

Both backends must pick bit-identical splits. The selection rule is: maximize
score = sumsqL/nL + sumsqR/nR (equivalent to minimizing the weighted Gini
impurity) over candidate features in ascending position and boundary indices
in ascending order, requiring a strict improvement over the parent score.
All counts are integers, so the float64 scores are deterministic functions of
identical integer inputs in both backends.
"""

import numpy as np

NO_SPLIT = (-1, np.nan)


def best_split_node(X, idx, feats, y, n_classes, min_leaf, parent_score, counts):
    """Best (feature position, threshold) for one tree node, or NO_SPLIT.

    X : float64 (N, d) matrix the node indexes into
    idx : int64 row indices of the node's samples
    feats : int64 candidate feature columns, ascending
    y : int32 class codes aligned with X rows
    counts : int64 per-class counts of the node (= bincount of y[idx])
    """
    n = len(idx)
    sub = X[np.ix_(idx, feats)]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = y[idx][order]

    onehot = ys[:, :, None] == np.arange(n_classes, dtype=ys.dtype)
    cum = np.cumsum(onehot, axis=0, dtype=np.int64)
    sumsq_left = np.sum(cum * cum, axis=2)
    cum_right = counts[None, None, :] - cum
    sumsq_right = np.sum(cum_right * cum_right, axis=2)

    n_left = np.arange(1, n + 1, dtype=np.int64)[:, None]
    n_right = n - n_left
    score = sumsq_left[:-1] / n_left[:-1] + sumsq_right[:-1] / n_right[:-1]
    valid = (
        (xs[:-1] < xs[1:])
        & (n_left[:-1] >= min_leaf)
        & (n_right[:-1] >= min_leaf)
    )
    score[~valid] = -np.inf

    flat = score.T.ravel()  # feature-major: ties resolve to lowest feature, then lowest position
    best = int(np.argmax(flat))
    if not flat[best] > parent_score:
        return NO_SPLIT
    j, i = divmod(best, n - 1)
    threshold = (xs[i, j] + xs[i + 1, j]) / 2.0
    return j, float(threshold)
