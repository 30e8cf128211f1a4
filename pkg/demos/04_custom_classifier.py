"""
Plugging in another classifier
==============================

Any object with ``fit(X, y, n_classes, is_categorical, n_categories, rng)``
and ``predict(X)`` can drive the selector.  Here a nearest-centroid rule is
registered and used on the Wine data.
"""

import numpy as np

from wrapperfs import ClassifierSpec, EvalConfig, load_builtin, register_classifier, select


class NearestCentroid:
    def fit(self, X, y, n_classes, is_categorical=None, n_categories=None, rng=None):
        lo, hi = X.min(axis=0), X.max(axis=0)
        self.scale_ = np.where(hi > lo, hi - lo, 1.0)
        self.lo_ = lo
        Z = (X - lo) / self.scale_
        self.centroids_ = np.array([Z[y == c].mean(axis=0) for c in range(n_classes)])
        return self

    def predict(self, X):
        Z = (X - self.lo_) / self.scale_
        dist = ((Z[:, None, :] - self.centroids_[None]) ** 2).sum(axis=2)
        return np.argmin(dist, axis=1)


register_classifier("centroid", lambda spec: NearestCentroid())

d = load_builtin("wine")
res = select(d, EvalConfig(repeats=10, seed=0, classifier=ClassifierSpec("centroid")))
print(f"{res.before} -> {res.after} with {res.sizes[1]} of {res.sizes[0]} features")
print(", ".join(res.selected.names(d)))
