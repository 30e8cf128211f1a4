"""Weighted k-nearest-neighbour classification.

Numeric columns are min-max scaled with training statistics; categorical
columns are one-hot encoded, so a category mismatch costs 2 under the
city-block metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..data import minmax_apply, minmax_fit

METRICS = {"city-block": "cityblock", "euclidean": "euclidean"}
WEIGHTINGS = ("squared-inverse", "uniform")
SCALINGS = ("min-max", "none")


@dataclass(frozen=True)
class KnnParams:
    k: int = 6
    metric: str = "city-block"
    weighting: str = "squared-inverse"
    scaling: str = "min-max"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {sorted(METRICS)}")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        if self.scaling not in SCALINGS:
            raise ValueError(f"scaling must be one of {SCALINGS}")


def encode(X, is_categorical, n_categories):
    """Replace every categorical code column with its one-hot indicator block."""
    X = np.asarray(X, dtype=float)
    if is_categorical is None or not np.any(is_categorical):
        return X
    blocks = []
    for j in range(X.shape[1]):
        if is_categorical[j]:
            codes = X[:, j].astype(np.int64)
            blocks.append(np.eye(int(n_categories[j]))[codes])
        else:
            blocks.append(X[:, j:j + 1])
    return np.hstack(blocks) if blocks else X


def nearest(D: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` smallest entries per row of ``D``.

    Ordered by (distance, column index), so equal distances resolve to the
    lower training index.
    """
    n_rows, n_cols = D.shape
    if k >= n_cols:
        return np.argsort(D, axis=1, kind="stable")[:, :k]
    kth = np.partition(D, k - 1, axis=1)[:, k - 1:k]
    rows, cols = np.nonzero(D <= kth)
    order = np.lexsort((cols, D[rows, cols], rows))
    rows, cols = rows[order], cols[order]
    starts = np.searchsorted(rows, np.arange(n_rows))
    rank = np.arange(len(rows)) - starts[rows]
    return cols[rank < k].reshape(n_rows, k)


def vote(dist: np.ndarray, labels: np.ndarray, n_classes: int, weighting: str) -> np.ndarray:
    """Weighted vote over neighbour rows (``dist``/``labels`` shaped (m, k)).

    Any zero-distance neighbour short-circuits the weights: the majority class
    among the zero-distance neighbours wins.  Ties go to the lowest class.
    """
    m = dist.shape[0]
    if weighting == "uniform":
        w = np.ones_like(dist)
    else:
        with np.errstate(divide="ignore"):
            w = 1.0 / (dist * dist)
    zero = dist == 0
    has_zero = zero.any(axis=1)
    w = np.where(has_zero[:, None], zero.astype(float), w)
    scores = np.zeros((m, n_classes))
    np.add.at(scores, (np.repeat(np.arange(m), dist.shape[1]), labels.ravel()), w.ravel())
    return np.argmax(scores, axis=1)


class KnnClassifier:
    def __init__(self, params: KnnParams = KnnParams()):
        self.params = params

    def fit(self, X, y, n_classes, is_categorical=None, n_categories=None, rng=None):
        X = np.asarray(X, dtype=float)
        self.is_categorical_ = (np.zeros(X.shape[1], dtype=bool) if is_categorical is None
                                else np.asarray(is_categorical, dtype=bool))
        self.n_categories_ = n_categories
        self.stats_ = minmax_fit(X, self.is_categorical_) if self.params.scaling == "min-max" else None
        self.train_ = self._transform(X)
        self.y_ = np.asarray(y, dtype=np.int64)
        self.n_classes_ = int(n_classes)
        return self

    def _transform(self, X):
        if self.stats_ is not None:
            X = minmax_apply(X, self.stats_)
        return encode(X, self.is_categorical_, self.n_categories_)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        k = self.params.k
        if k > len(self.y_):
            raise ValueError(f"k={k} exceeds the {len(self.y_)} training rows")
        Q = self._transform(X)
        if Q.shape[1] != self.train_.shape[1]:
            raise ValueError("query dimension does not match the training data")
        D = cdist(Q, self.train_, metric=METRICS[self.params.metric])
        idx = nearest(D, k)
        dist = np.take_along_axis(D, idx, axis=1)
        return vote(dist, self.y_[idx], self.n_classes_, self.params.weighting)


def knn_predict(train_X, train_y, params: KnnParams, rows, n_classes=None,
                is_categorical=None, n_categories=None) -> np.ndarray:
    """One-shot fit-and-predict convenience wrapper."""
    n_classes = int(np.max(train_y)) + 1 if n_classes is None else n_classes
    model = KnnClassifier(params).fit(train_X, train_y, n_classes, is_categorical, n_categories)
    return model.predict(rows)
