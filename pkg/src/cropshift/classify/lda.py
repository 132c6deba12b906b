"""Linear discriminant analysis: Gaussian mixture with pooled covariance.

Posteriors are the Bayes rule of the fitted mixture, evaluated in log space:
softmax over classes of log(prior) - 0.5 * squared Mahalanobis distance from
the class mean under the pooled covariance.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from cropshift.dataset import ClassPriors, Dataset
from cropshift.errors import DimensionMismatch, EmptyClass, SingularCovariance

DEFAULT_RIDGE = 1e-6


@dataclass
class LdaModel:
    class_list: tuple
    class_means: np.ndarray  # (K, d)
    covariance: np.ndarray  # (d, d) pooled, ridge-regularized
    train_priors: ClassPriors
    ridge: float
    _cho: tuple = None  # cached Cholesky factorization

    def __post_init__(self):
        if self._cho is None:
            try:
                self._cho = cho_factor(self.covariance, lower=True)
            except LinAlgError as exc:
                raise SingularCovariance(str(exc)) from exc

    @property
    def n_features(self) -> int:
        return self.class_means.shape[1]

    def posteriors(self, x):
        return lda_posteriors(self, x)

    def posterior_matrix(self, X):
        return lda_posterior_matrix(self, X)


def lda_fit(data: Dataset, ridge: float = DEFAULT_RIDGE, region_id: str = "") -> LdaModel:
    """Fit class means, empirical priors, and the pooled within-class covariance.

    The pooled covariance is the within-class scatter over (N - K) plus
    ridge * mean(diagonal) * I; harmonic features are correlated enough that
    the unregularized estimate can be near-singular.
    """
    X = data.features
    codes = data.label_codes()
    n, d = X.shape
    k = len(data.class_list)
    counts = data.class_counts()
    empty = [c for c, cnt in zip(data.class_list, counts) if cnt == 0]
    if empty:
        raise EmptyClass(f"classes with no training samples: {empty}")
    if n <= k:
        raise SingularCovariance(
            f"pooled covariance needs more samples than classes (N={n}, K={k})"
        )
    means = np.empty((k, d))
    scatter = np.zeros((d, d))
    for c in range(k):
        Xc = X[codes == c]
        means[c] = Xc.mean(axis=0)
        centered = Xc - means[c]
        scatter += centered.T @ centered
    pooled = scatter / (n - k)
    scale = float(np.mean(np.diag(pooled)))
    if scale <= 0.0:
        scale = 1.0  # zero within-class scatter: fall back to an absolute ridge
    regularized = pooled + ridge * scale * np.eye(d)
    try:
        cho = cho_factor(regularized, lower=True)
    except LinAlgError as exc:
        raise SingularCovariance(
            f"pooled covariance not positive definite after ridge={ridge}"
        ) from exc
    priors = ClassPriors(region_id or "train", data.class_list, counts / counts.sum())
    return LdaModel(data.class_list, means, regularized, priors, ridge, cho)


def lda_posterior_matrix(model: LdaModel, X) -> np.ndarray:
    """Posterior probabilities for each row of X, rows summing to one."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"got {X.shape[1]} features, model expects {model.n_features}"
        )
    k = len(model.class_list)
    log_scores = np.empty((len(X), k))
    log_priors = np.log(model.train_priors.as_vector(model.class_list))
    for c in range(k):
        diff = X - model.class_means[c]
        solved = cho_solve(model._cho, diff.T)
        maha_sq = np.sum(diff.T * solved, axis=0)
        log_scores[:, c] = log_priors[c] - 0.5 * maha_sq
    log_scores -= log_scores.max(axis=1, keepdims=True)
    p = np.exp(log_scores)
    p /= p.sum(axis=1, keepdims=True)
    return p


def lda_posteriors(model: LdaModel, x) -> np.ndarray:
    """Posterior vector for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("lda_posteriors expects a single feature vector")
    return lda_posterior_matrix(model, x[None, :])[0]
