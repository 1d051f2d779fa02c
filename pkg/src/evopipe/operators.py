"""Native ML operators: four classifiers and five transformers.

Each operator is deterministic given its inputs, so pipeline evaluation
needs no per-operator seeding. Transformers expose fit/transform, and the
resulting feature width is fixed by the fitted state; classifiers expose
fit/predict over {0,1} labels. Anything that cannot fit (too few columns,
degenerate input) raises OperatorError, which evaluation folds into the
FAILED fitness sentinel.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, OperatorError
from .pipeline import (
    CLASSIFIER,
    TRANSFORMER,
    HyperparamSpec,
    OperatorSpec,
    Registry,
)


def _check_finite(x: np.ndarray, who: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise OperatorError(f"{who} produced non-finite values")
    return x


def _check_has_columns(x: np.ndarray, who: str) -> None:
    if x.ndim != 2 or x.shape[1] == 0:
        raise OperatorError(f"{who} received an empty feature matrix")


class StandardScaler:
    """Column-wise zero mean, unit variance; constant columns pass through."""

    kind = TRANSFORMER

    def fit(self, x):
        _check_has_columns(x, "StandardScaler")
        self.mean_ = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0.0] = 1.0
        self.scale_ = scale
        return self

    def transform(self, x):
        return _check_finite((x - self.mean_) / self.scale_, "StandardScaler")


class MinMaxScaler:
    """Rescale each column to [0,1] over the fitted range."""

    kind = TRANSFORMER

    def fit(self, x):
        _check_has_columns(x, "MinMaxScaler")
        self.min_ = x.min(axis=0)
        span = x.max(axis=0) - self.min_
        span[span == 0.0] = 1.0
        self.span_ = span
        return self

    def transform(self, x):
        return _check_finite((x - self.min_) / self.span_, "MinMaxScaler")


class Normalizer:
    """Scale each row to unit L2 norm; zero rows stay zero."""

    kind = TRANSFORMER

    def fit(self, x):
        _check_has_columns(x, "Normalizer")
        return self

    def transform(self, x):
        norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
        norms[norms == 0.0] = 1.0
        return _check_finite(x / norms, "Normalizer")


class PCA:
    """Project onto the top eigenvectors of the covariance matrix."""

    kind = TRANSFORMER

    def __init__(self, n_components: int):
        self.n_components = int(n_components)

    def fit(self, x):
        _check_has_columns(x, "PCA")
        n, d = x.shape
        if self.n_components > d:
            raise OperatorError(f"PCA: {self.n_components} components but only {d} columns")
        if n < 2:
            raise OperatorError("PCA: need at least two rows")
        self.mean_ = x.mean(axis=0)
        cov = np.cov(x - self.mean_, rowvar=False, ddof=1)
        cov = np.atleast_2d(cov)
        vals, vecs = np.linalg.eigh(cov)
        order = np.argsort(vals, kind="stable")[::-1][: self.n_components]
        comps = vecs[:, order]
        # Fix each component's sign so results do not depend on LAPACK details.
        flip = comps[np.abs(comps).argmax(axis=0), np.arange(comps.shape[1])] < 0
        comps[:, flip] *= -1.0
        self.components_ = comps
        return self

    def transform(self, x):
        return _check_finite((x - self.mean_) @ self.components_, "PCA")


class VarianceThreshold:
    """Drop columns whose training variance does not exceed the threshold."""

    kind = TRANSFORMER

    def __init__(self, threshold: float):
        self.threshold = float(threshold)

    def fit(self, x):
        _check_has_columns(x, "VarianceThreshold")
        self.keep_ = x.var(axis=0) > self.threshold
        if not self.keep_.any():
            raise OperatorError("VarianceThreshold removed every column")
        return self

    def transform(self, x):
        return x[:, self.keep_]


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


class LogisticRegression:
    """L2-regularized logistic regression fit by full-batch gradient descent.

    The step size is 1/L for a Lipschitz bound L of the regularized loss
    gradient, and the iteration count is capped, so fitting always terminates
    and never diverges.
    """

    kind = CLASSIFIER
    max_iter = 120

    def __init__(self, l2: float):
        self.l2 = float(l2)

    def fit(self, x, y):
        _check_has_columns(x, "LogisticRegression")
        n = x.shape[0]
        xb = np.hstack([x, np.ones((n, 1))])
        lipschitz = np.square(xb).sum() / (4.0 * n) + self.l2
        step = 1.0 / lipschitz
        w = np.zeros(xb.shape[1])
        yf = y.astype(float)
        reg = np.full(xb.shape[1], self.l2)
        reg[-1] = 0.0  # intercept is not penalized
        for _ in range(self.max_iter):
            grad = xb.T @ (_sigmoid(xb @ w) - yf) / n + reg * w
            w -= step * grad
        self.w_ = _check_finite(w, "LogisticRegression")
        return self

    def predict(self, x):
        return (x @ self.w_[:-1] + self.w_[-1] >= 0.0).astype(np.int64)


class DecisionTree:
    """Depth-capped CART with Gini impurity splits and a leaf-size floor."""

    kind = CLASSIFIER

    def __init__(self, max_depth: int, min_samples_leaf: int = 1):
        self.max_depth = int(max_depth)
        self.min_samples_leaf = int(min_samples_leaf)

    def fit(self, x, y):
        _check_has_columns(x, "DecisionTree")
        if self.max_depth < 1 or self.min_samples_leaf < 1:
            raise OperatorError("DecisionTree: bad depth or leaf size")
        # Sort every column once; partitions below preserve each column's order,
        # so split search never re-sorts.
        columns = np.argsort(x, axis=0, kind="stable")
        self._n_rows = x.shape[0]
        self._scratch = np.zeros(x.shape[0], dtype=bool)
        self.tree_ = self._grow(x, y, columns, self.max_depth)
        del self._scratch
        return self

    def _best_split(self, x, y, columns, pos):
        # columns: (size, d) row indices, column j ascending in feature j.
        n, d = columns.shape
        leaf = self.min_samples_leaf
        xs = x[columns, np.arange(d)]
        left_pos = np.cumsum(y[columns], axis=0)[:-1].astype(float)
        left_n = np.arange(1.0, n)[:, None]
        right_n = n - left_n
        right_pos = pos - left_pos
        gl = 2.0 * (left_pos / left_n) * (1.0 - left_pos / left_n)
        gr = 2.0 * (right_pos / right_n) * (1.0 - right_pos / right_n)
        weighted = (left_n * gl + right_n * gr) / n
        valid = xs[1:] > xs[:-1]
        if leaf > 1:
            valid[: leaf - 1] = False
            valid[n - leaf :] = False
        weighted[~valid] = np.inf
        flat = int(np.argmin(weighted))
        i, j = divmod(flat, d)
        p = pos / n
        if weighted[i, j] >= 2.0 * p * (1.0 - p) - 1e-12:  # must strictly improve
            return None, None
        return j, 0.5 * (xs[i, j] + xs[i + 1, j])

    def _grow(self, x, y, columns, depth):
        size, d = columns.shape
        pos = int(y[columns[:, 0]].sum())
        majority = 1 if 2 * pos > size else 0  # ties predict class 0
        if depth == 0 or pos == 0 or pos == size or size < 2 * self.min_samples_leaf:
            return majority
        feature, thresh = self._best_split(x, y, columns, pos)
        if feature is None:
            return majority
        goes_left = self._scratch
        col = columns[:, feature]
        left_rows = col[x[col, feature] <= thresh]
        goes_left[left_rows] = True
        mask = goes_left[columns]
        left_cols = columns.T[mask.T].reshape(d, -1).T
        right_cols = columns.T[~mask.T].reshape(d, -1).T
        goes_left[left_rows] = False  # reset shared scratch before recursion
        left = self._grow(x, y, left_cols, depth - 1)
        right = self._grow(x, y, right_cols, depth - 1)
        return (feature, thresh, left, right)

    def _predict_node(self, node, x, out, rows):
        if isinstance(node, int):
            out[rows] = node
            return
        feature, thresh, left, right = node
        mask = x[rows, feature] <= thresh
        self._predict_node(left, x, out, rows[mask])
        self._predict_node(right, x, out, rows[~mask])

    def predict(self, x):
        out = np.empty(x.shape[0], dtype=np.int64)
        self._predict_node(self.tree_, x, out, np.arange(x.shape[0]))
        return out


class KNeighbors:
    """k-nearest-neighbor vote with squared-Euclidean distances.

    Uniform voting or inverse-distance weighting. Neighbor order ties break
    by training index; a dead-even vote goes to the single nearest neighbor's
    label, so predictions are deterministic.
    """

    kind = CLASSIFIER

    def __init__(self, n_neighbors: int, weights: str = "uniform"):
        self.n_neighbors = int(n_neighbors)
        if weights not in ("uniform", "distance"):
            raise OperatorError(f"KNeighbors: unknown weighting {weights!r}")
        self.weights = weights

    def fit(self, x, y):
        _check_has_columns(x, "KNeighbors")
        if self.n_neighbors > x.shape[0]:
            raise OperatorError("KNeighbors: more neighbors than training rows")
        self.x_ = x
        self.y_ = y
        return self

    def predict(self, x):
        d2 = (
            np.square(x).sum(axis=1, keepdims=True)
            - 2.0 * (x @ self.x_.T)
            + np.square(self.x_).sum(axis=1)
        )
        k = self.n_neighbors
        if k < d2.shape[1]:
            part = np.argpartition(d2, k - 1, axis=1)[:, :k]
            rows = np.arange(d2.shape[0])[:, None]
            inner = np.argsort(d2[rows, part], axis=1, kind="stable")
            nearest = part[rows, inner]
        else:
            nearest = np.argsort(d2, axis=1, kind="stable")
        votes = self.y_[nearest]
        if self.weights == "uniform":
            weight = np.ones_like(votes, dtype=float)
        else:
            rows = np.arange(x.shape[0])[:, None]
            weight = 1.0 / (np.sqrt(np.maximum(d2[rows, nearest], 0.0)) + 1e-9)
        score_one = (weight * votes).sum(axis=1)
        score_zero = (weight * (1 - votes)).sum(axis=1)
        pred = np.where(score_one > score_zero, 1, 0)
        even = score_one == score_zero
        if even.any():
            pred[even] = self.y_[nearest[even, 0]]
        return pred.astype(np.int64)


class GaussianNB:
    """Gaussian naive Bayes with relative variance smoothing."""

    kind = CLASSIFIER

    def __init__(self, var_smoothing: float):
        self.var_smoothing = float(var_smoothing)

    def fit(self, x, y):
        _check_has_columns(x, "GaussianNB")
        self.classes_ = np.array([0, 1])
        eps = self.var_smoothing * max(float(x.var(axis=0).max()), 1e-12)
        means, variances, priors = [], [], []
        for c in (0, 1):
            rows = x[y == c]
            if rows.shape[0] == 0:
                raise OperatorError("GaussianNB: a class is absent from training data")
            means.append(rows.mean(axis=0))
            variances.append(rows.var(axis=0) + eps)
            priors.append(rows.shape[0] / x.shape[0])
        self.means_ = np.stack(means)
        self.vars_ = np.stack(variances)
        self.log_priors_ = np.log(np.array(priors))
        return self

    def predict(self, x):
        scores = []
        for c in (0, 1):
            diff = x - self.means_[c]
            ll = -0.5 * (np.log(2.0 * np.pi * self.vars_[c]) + diff * diff / self.vars_[c])
            scores.append(ll.sum(axis=1) + self.log_priors_[c])
        return (scores[1] > scores[0]).astype(np.int64)


IMPLEMENTATIONS = {
    "LogisticRegression": LogisticRegression,
    "DecisionTree": DecisionTree,
    "KNeighbors": KNeighbors,
    "GaussianNB": GaussianNB,
    "StandardScaler": StandardScaler,
    "MinMaxScaler": MinMaxScaler,
    "Normalizer": Normalizer,
    "PCA": PCA,
    "VarianceThreshold": VarianceThreshold,
}

_DEFAULT_SPECS = (
    OperatorSpec("LogisticRegression", CLASSIFIER,
                 hyperparams=(HyperparamSpec("l2", (1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0)),)),
    OperatorSpec("DecisionTree", CLASSIFIER,
                 hyperparams=(HyperparamSpec("max_depth", (2, 3, 4, 5, 6, 8)),
                              HyperparamSpec("min_samples_leaf", (1, 4, 16, 64)))),
    OperatorSpec("KNeighbors", CLASSIFIER,
                 hyperparams=(HyperparamSpec("n_neighbors", (1, 3, 5, 9, 15, 25, 41, 65)),
                              HyperparamSpec("weights", ("uniform", "distance")))),
    OperatorSpec("GaussianNB", CLASSIFIER,
                 hyperparams=(HyperparamSpec("var_smoothing", (1e-9, 1e-6, 1e-3, 0.1, 1.0)),)),
    OperatorSpec("StandardScaler", TRANSFORMER),
    OperatorSpec("MinMaxScaler", TRANSFORMER),
    OperatorSpec("Normalizer", TRANSFORMER),
    OperatorSpec("PCA", TRANSFORMER,
                 hyperparams=(HyperparamSpec("n_components", (2, 3, 4, 5, 6, 8)),)),
    OperatorSpec("VarianceThreshold", TRANSFORMER,
                 hyperparams=(HyperparamSpec("threshold", (0.0, 0.05, 0.5, 0.9, 1.0, 1.1)),)),
)


def default_registry() -> Registry:
    return Registry(_DEFAULT_SPECS)


def make_operator(name: str, params: dict):
    """Instantiate the implementation behind an operator spec."""
    try:
        cls = IMPLEMENTATIONS[name]
    except KeyError:
        raise ConfigurationError(f"no implementation for operator {name!r}") from None
    return cls(**params)


def check_evaluable(registry: Registry) -> None:
    """Verify every registry operator has an implementation it can be run with."""
    for op in registry.operators:
        if op.name not in IMPLEMENTATIONS:
            raise ConfigurationError(f"no implementation for operator {op.name!r}")
        impl = IMPLEMENTATIONS[op.name]
        if impl.kind != op.kind:
            raise ConfigurationError(
                f"operator {op.name!r} is declared {op.kind} but implemented as {impl.kind}"
            )
        try:
            make_operator(op.name, {hp.name: hp.domain[0] for hp in op.hyperparams})
        except TypeError as exc:
            raise ConfigurationError(f"operator {op.name!r}: {exc}") from exc
