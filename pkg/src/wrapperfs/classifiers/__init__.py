"""Pluggable classifiers.

Every classifier exposes ``fit(X, y, n_classes, is_categorical, n_categories,
rng)`` and ``predict(X)`` over the float code matrix of
:class:`wrapperfs.data.Dataset`.  New kinds are added with
:func:`register_classifier`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cart import CartClassifier, CartParams, DecisionTree, best_split, gini, grow_tree, predict_cart, train_cart
from .knn import KnnClassifier, KnnParams, knn_predict


class MajorityClassifier:
    """Predicts the most frequent training class (lowest index on ties)."""

    def fit(self, X, y, n_classes, is_categorical=None, n_categories=None, rng=None):
        self.label_ = int(np.argmax(np.bincount(np.asarray(y), minlength=n_classes)))
        return self

    def predict(self, X):
        return np.full(len(X), self.label_, dtype=np.int64)


_FACTORIES: dict[str, Callable] = {}


def register_classifier(kind: str, factory: Callable) -> None:
    """Make ``ClassifierSpec(kind)`` build ``factory(spec)``."""
    _FACTORIES[kind] = factory


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "cart"
    cart: CartParams | None = None
    knn: KnnParams | None = None

    def __post_init__(self):
        if self.kind == "cart" and self.cart is None:
            object.__setattr__(self, "cart", CartParams())
        if self.kind == "knn" and self.knn is None:
            object.__setattr__(self, "knn", KnnParams())
        if self.kind not in _FACTORIES:
            raise ValueError(f"unknown classifier kind {self.kind!r}; known: {sorted(_FACTORIES)}")
        if (self.kind == "cart") != (self.cart is not None) or (self.kind == "knn") != (self.knn is not None):
            raise ValueError(f"exactly the {self.kind!r} parameter block must be present")

    @classmethod
    def make_cart(cls, **kw) -> "ClassifierSpec":
        return cls("cart", cart=CartParams(**kw))

    @classmethod
    def make_knn(cls, **kw) -> "ClassifierSpec":
        return cls("knn", knn=KnnParams(**kw))

    def build(self):
        return _FACTORIES[self.kind](self)

    def describe(self) -> str:
        if self.kind == "knn":
            p = self.knn
            return f"knn(k={p.k}, {p.metric}, {p.weighting}, {p.scaling})"
        if self.kind == "cart":
            p = self.cart
            depth = "inf" if p.max_depth is None else p.max_depth
            prune = f"pruned/{p.prune_folds}cv" if p.prune else "unpruned"
            return f"cart(min_leaf={p.min_leaf_size}, depth={depth}, {prune})"
        return self.kind


register_classifier("cart", lambda spec: CartClassifier(spec.cart))
register_classifier("knn", lambda spec: KnnClassifier(spec.knn))
register_classifier("majority", lambda spec: MajorityClassifier())

__all__ = [
    "CartClassifier", "CartParams", "ClassifierSpec", "DecisionTree", "KnnClassifier", "KnnParams",
    "MajorityClassifier", "best_split", "gini", "grow_tree", "knn_predict", "predict_cart",
    "register_classifier", "train_cart",
]
