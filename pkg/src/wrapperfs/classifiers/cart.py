"""CART classification trees: Gini splits, binary numeric/categorical
predicates, cost-complexity pruning with the penalty chosen by internal
cross-validation.

The growth, pruning and routing loops are compiled with numba; everything
else is plain numpy.  Trees are stored as flat node arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

# Relative slack when comparing impurity decreases: candidates closer than
# this are treated as ties and the earlier candidate wins.
TIE_EPS = 1e-12

# Categorical features with more present categories than this are split by
# ordering categories on the proportion of the node's majority class.
MAX_EXHAUSTIVE_CATEGORIES = 12


@dataclass(frozen=True)
class CartParams:
    min_leaf_size: int = 1
    max_depth: int | None = None
    prune: bool = True
    prune_folds: int = 5

    def __post_init__(self):
        if self.min_leaf_size < 1:
            raise ValueError("min_leaf_size must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be a positive integer or None")
        if self.prune and self.prune_folds < 2:
            raise ValueError("prune_folds must be >= 2 when pruning")


def gini(class_counts: Sequence[int]) -> float:
    """Gini impurity ``1 - sum(p_c ** 2)`` of a vector of class counts."""
    counts = np.asarray(class_counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("class counts must be nonnegative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("gini of an empty node is undefined")
    p = counts / total
    return float(1.0 - np.sum(p * p))


# --------------------------------------------------------------------------
# compiled kernels


@numba.njit(cache=True, nogil=True)
def _gini_counts(counts, total):
    s = 0.0
    for c in counts:
        s += c * c
    return 1.0 - s / (total * total)


@numba.njit(cache=True, nogil=True)
def _best_split(X, y, order, start, end, n_classes, is_cat, n_cat, min_leaf):
    """Best Gini split of the node holding ``order[:, start:end]``.

    ``order[f, start:end]`` lists the node's rows sorted by feature ``f``.
    Returns (feature, threshold, left-category mask, decrease); feature is -1
    when no split strictly decreases the weighted impurity.
    """
    m = end - start
    n_features = X.shape[1]
    parent = np.zeros(n_classes)
    for i in range(start, end):
        parent[y[order[0, i]]] += 1.0
    g_parent = _gini_counts(parent, m)

    best_f = -1
    best_t = 0.0
    best_mask = np.int64(0)
    best_dec = 0.0
    left = np.zeros(n_classes)
    right = np.zeros(n_classes)

    for f in range(n_features):
        if not is_cat[f]:
            left[:] = 0.0
            for i in range(start, end - 1):
                r = order[f, i]
                left[y[r]] += 1.0
                v, w = X[r, f], X[order[f, i + 1], f]
                if v == w:
                    continue
                nl = i + 1 - start
                nr = m - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                for c in range(n_classes):
                    right[c] = parent[c] - left[c]
                dec = g_parent - (nl * _gini_counts(left, nl) + nr * _gini_counts(right, nr)) / m
                if dec > best_dec + TIE_EPS * (1.0 + best_dec):
                    t = 0.5 * (v + w)
                    if t >= w:
                        t = v
                    best_f, best_t, best_mask, best_dec = f, t, np.int64(0), dec
        else:
            k = n_cat[f]
            table = np.zeros((k, n_classes))
            for i in range(start, end):
                r = order[f, i]
                table[int(X[r, f]), y[r]] += 1.0
            present = np.zeros(k, dtype=np.int64)
            p = 0
            for c in range(k):
                if table[c].sum() > 0:
                    present[p] = c
                    p += 1
            if p < 2:
                continue
            if p <= MAX_EXHAUSTIVE_CATEGORIES:
                # the lowest present category always goes left; subsets in
                # ascending bit order
                for sub in range(1 << (p - 1)):
                    local = (sub << 1) | 1
                    if local == (1 << p) - 1:
                        continue
                    left[:] = 0.0
                    mask = np.int64(0)
                    for b in range(p):
                        if (local >> b) & 1:
                            mask |= np.int64(1) << present[b]
                            for c in range(n_classes):
                                left[c] += table[present[b], c]
                    nl = left.sum()
                    nr = m - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    for c in range(n_classes):
                        right[c] = parent[c] - left[c]
                    dec = g_parent - (nl * _gini_counts(left, nl) + nr * _gini_counts(right, nr)) / m
                    if dec > best_dec + TIE_EPS * (1.0 + best_dec):
                        best_f, best_t, best_mask, best_dec = f, 0.0, mask, dec
            else:
                major = np.argmax(parent)
                score = np.empty(p)
                for b in range(p):
                    row = table[present[b]]
                    score[b] = row[major] / row.sum()
                rank = np.argsort(score, kind="mergesort")
                left[:] = 0.0
                mask = np.int64(0)
                for b in range(p - 1):
                    cat = present[rank[b]]
                    mask |= np.int64(1) << cat
                    for c in range(n_classes):
                        left[c] += table[cat, c]
                    nl = left.sum()
                    nr = m - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    for c in range(n_classes):
                        right[c] = parent[c] - left[c]
                    dec = g_parent - (nl * _gini_counts(left, nl) + nr * _gini_counts(right, nr)) / m
                    if dec > best_dec + TIE_EPS * (1.0 + best_dec):
                        best_f, best_t, best_mask, best_dec = f, 0.0, mask, dec
    return best_f, best_t, best_mask, best_dec


@numba.njit(cache=True, nogil=True)
def _goes_left(x, feature, threshold, mask, is_cat):
    if is_cat[feature]:
        code = int(x)
        return code >= 0 and code < 63 and ((mask >> code) & 1) == 1
    return x <= threshold


@numba.njit(cache=True, nogil=True)
def _grow(X, y, n_classes, is_cat, n_cat, min_leaf, max_depth):
    n = X.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    catmask = np.zeros(cap, dtype=np.int64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    parent = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, n_classes), dtype=np.int64)
    decrease = np.zeros(cap)

    n_features = X.shape[1]
    order = np.empty((max(n_features, 1), n), dtype=np.int64)
    if n_features == 0:
        order[0] = np.arange(n)
    for f in range(n_features):
        order[f] = np.argsort(X[:, f], kind="mergesort")
    # stack of (node, start, end, depth)
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0], stack[0, 1], stack[0, 2], stack[0, 3] = 0, 0, n, 0
    top = 1
    n_nodes = 1
    buf = np.empty(n, dtype=np.int64)
    goes = np.zeros(n, dtype=np.bool_)
    while top > 0:
        top -= 1
        node, start, end, depth = stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3]
        for i in range(start, end):
            counts[node, y[order[0, i]]] += 1
        m = end - start
        pure = False
        for c in range(n_classes):
            if counts[node, c] == m:
                pure = True
        if pure or m < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue
        f, t, mask, dec = _best_split(X, y, order, start, end, n_classes, is_cat, n_cat, min_leaf)
        if f < 0:
            continue
        nl = 0
        for i in range(start, end):
            r = order[0, i]
            goes[r] = _goes_left(X[r, f], f, t, mask, is_cat)
            if goes[r]:
                nl += 1
        # stable partition of every feature's sorted segment
        for g in range(order.shape[0]):
            a = 0
            b = nl
            for i in range(start, end):
                r = order[g, i]
                if goes[r]:
                    buf[a] = r
                    a += 1
                else:
                    buf[b] = r
                    b += 1
            for i in range(m):
                order[g, start + i] = buf[i]
        feature[node], threshold[node], catmask[node], decrease[node] = f, t, mask, dec
        lc, rc = n_nodes, n_nodes + 1
        n_nodes += 2
        left[node], right[node] = lc, rc
        parent[lc], parent[rc] = node, node
        # right pushed first so the left subtree is numbered first
        stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3] = rc, start + nl, end, depth + 1
        top += 1
        stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3] = lc, start, start + nl, depth + 1
        top += 1
    return (feature[:n_nodes], threshold[:n_nodes], catmask[:n_nodes], left[:n_nodes],
            right[:n_nodes], parent[:n_nodes], counts[:n_nodes], decrease[:n_nodes])


@numba.njit(cache=True, nogil=True)
def _prune_alphas(left, right, parent, counts, n_total):
    """Minimal cost-complexity (weakest-link) pruning.

    Returns, per node, the penalty at which the node collapses into a leaf
    (``inf`` for leaves), plus the ascending sequence of distinct penalties.
    """
    n_nodes = left.shape[0]
    err = np.empty(n_nodes)
    for t in range(n_nodes):
        err[t] = (counts[t].sum() - counts[t].max()) / n_total
    collapsed = np.zeros(n_nodes, dtype=np.bool_)
    alpha = np.full(n_nodes, np.inf)
    subtree_err = np.empty(n_nodes)
    leaves = np.empty(n_nodes)
    active = np.empty(n_nodes, dtype=np.bool_)
    seq = np.empty(n_nodes)
    n_seq = 0
    while True:
        for t in range(n_nodes - 1, -1, -1):
            if left[t] < 0 or collapsed[t]:
                subtree_err[t] = err[t]
                leaves[t] = 1.0
            else:
                subtree_err[t] = subtree_err[left[t]] + subtree_err[right[t]]
                leaves[t] = leaves[left[t]] + leaves[right[t]]
        gmin = np.inf
        for t in range(n_nodes):
            if t == 0:
                active[t] = True
            else:
                p = parent[t]
                active[t] = active[p] and not collapsed[p]
            if active[t] and left[t] >= 0 and not collapsed[t]:
                g = (err[t] - subtree_err[t]) / (leaves[t] - 1.0)
                if g < gmin:
                    gmin = g
        if gmin == np.inf:
            break
        if gmin < 0.0:
            gmin = 0.0
        cut = gmin + 1e-12 * (1.0 + gmin)
        for t in range(n_nodes):
            if active[t] and left[t] >= 0 and not collapsed[t]:
                g = (err[t] - subtree_err[t]) / (leaves[t] - 1.0)
                if g <= cut:
                    collapsed[t] = True
                    alpha[t] = gmin
        seq[n_seq] = gmin
        n_seq += 1
    return alpha, seq[:n_seq]


@numba.njit(cache=True, nogil=True)
def _route(X, feature, threshold, catmask, left, right, is_cat, alpha, cut):
    """Leaf index reached by every row; nodes with ``alpha <= cut`` act as leaves."""
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        t = 0
        while left[t] >= 0 and alpha[t] > cut:
            if _goes_left(X[i, feature[t]], feature[t], threshold[t], catmask[t], is_cat):
                t = left[t]
            else:
                t = right[t]
        out[i] = t
    return out


# --------------------------------------------------------------------------
# public API


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """A fitted binary tree in flat-array form.

    ``feature[t] == -1`` marks a leaf.  Numeric nodes send ``x <= threshold``
    left; categorical nodes send categories whose bit is set in ``catmask``
    left (unseen categories go right).  ``counts[t]`` is the class
    distribution of the training rows routed to ``t``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    catmask: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    is_categorical: np.ndarray
    feature_names: tuple = ()
    class_names: tuple = ()

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def leaf_count(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=int)
        for t in range(self.node_count):
            if self.left[t] >= 0:
                depth[self.left[t]] = depth[self.right[t]] = depth[t] + 1
        return int(depth.max())

    def leaf_class(self) -> np.ndarray:
        # argmax picks the lowest class index on ties
        return np.argmax(self.counts, axis=1)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        never = np.full(self.node_count, np.inf)
        return _route(X, self.feature, self.threshold, self.catmask, self.left, self.right,
                      self.is_categorical, never, 0.0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_class()[self.apply(X)]

    def export_text(self) -> str:
        """Indented rule dump, for debugging only; the format is not stable."""
        lines = []

        def name(f):
            return self.feature_names[f] if self.feature_names else f"x{f}"

        def label(t):
            c = int(self.leaf_class()[t])
            return self.class_names[c] if self.class_names else str(c)

        def walk(t, indent):
            pad = "|   " * indent
            if self.feature[t] < 0:
                lines.append(f"{pad}class: {label(t)}  {self.counts[t].tolist()}")
                return
            f = self.feature[t]
            if self.is_categorical[f]:
                cats = [i for i in range(63) if (int(self.catmask[t]) >> i) & 1]
                lines.append(f"{pad}{name(f)} in {cats}")
                walk(self.left[t], indent + 1)
                lines.append(f"{pad}{name(f)} not in {cats}")
            else:
                lines.append(f"{pad}{name(f)} <= {self.threshold[t]:.6g}")
                walk(self.left[t], indent + 1)
                lines.append(f"{pad}{name(f)} >  {self.threshold[t]:.6g}")
            walk(self.right[t], indent + 1)

        walk(0, 0)
        return "\n".join(lines)


def _as_inputs(X, y, is_categorical, n_categories, n_classes):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=np.int64)
    nf = X.shape[1]
    is_cat = np.zeros(nf, dtype=bool) if is_categorical is None else np.asarray(is_categorical, dtype=bool)
    if n_categories is None:
        n_cat = np.zeros(nf, dtype=np.int64)
        for j in np.flatnonzero(is_cat):
            n_cat[j] = int(np.nanmax(X[:, j])) + 1 if len(X) else 1
    else:
        n_cat = np.asarray(n_categories, dtype=np.int64)
    if np.any(n_cat[is_cat] > 63):
        raise ValueError("categorical features are limited to 63 categories")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    return X, y, is_cat, n_cat, int(n_classes)


def best_split(X, y, is_categorical=None, n_categories=None, n_classes=None, min_leaf_size=1):
    """Best single Gini split of the rows ``(X, y)``.

    Returns ``None`` when no split strictly decreases the weighted impurity,
    otherwise a dict with ``feature``, ``threshold`` (numeric features),
    ``left_categories`` (categorical features) and ``decrease``.
    """
    X, y, is_cat, n_cat, k = _as_inputs(X, y, is_categorical, n_categories, n_classes)
    if len(X) == 0:
        raise ValueError("best_split needs at least one row")
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.int64)
    f, t, mask, dec = _best_split(X, y, order, 0, len(X), k, is_cat, n_cat, min_leaf_size)
    if f < 0:
        return None
    out = {"feature": int(f), "decrease": float(dec)}
    if is_cat[f]:
        out["left_categories"] = frozenset(i for i in range(63) if (int(mask) >> i) & 1)
    else:
        out["threshold"] = float(t)
    return out


def _compact(raw, alpha, cut, is_cat, feature_names=(), class_names=()):
    feature, threshold, catmask, left, right, _parent, counts, _dec = raw
    keep = []
    remap = {}
    stack = [0]
    while stack:
        t = stack.pop()
        remap[t] = len(keep)
        keep.append(t)
        if left[t] >= 0 and alpha[t] > cut:
            stack.append(right[t])
            stack.append(left[t])
    keep = np.array(keep)
    internal = np.array([left[t] >= 0 and alpha[t] > cut for t in keep], dtype=bool)
    new_left = np.array([remap[left[t]] if internal[i] else -1 for i, t in enumerate(keep)], dtype=np.int64)
    new_right = np.array([remap[right[t]] if internal[i] else -1 for i, t in enumerate(keep)], dtype=np.int64)
    return DecisionTree(
        feature=np.where(internal, feature[keep], -1).astype(np.int64),
        threshold=np.where(internal, threshold[keep], 0.0),
        catmask=np.where(internal, catmask[keep], 0).astype(np.int64),
        left=new_left,
        right=new_right,
        counts=counts[keep].copy(),
        is_categorical=is_cat,
        feature_names=tuple(feature_names),
        class_names=tuple(class_names),
    )


def _cv_folds(y, folds, rng):
    # stratified round-robin that tolerates classes smaller than ``folds``
    out = np.empty(len(y), dtype=np.int64)
    order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in np.unique(y)])
    out[order] = np.arange(len(y)) % folds
    return out


def grow_tree(X, y, params: CartParams = CartParams(), is_categorical=None, n_categories=None,
              n_classes=None, feature_names=(), class_names=()) -> DecisionTree:
    """Fully grown (unpruned) tree under ``params``' stopping rules."""
    X, y, is_cat, n_cat, k = _as_inputs(X, y, is_categorical, n_categories, n_classes)
    max_depth = -1 if params.max_depth is None else params.max_depth
    raw = _grow(X, y, k, is_cat, n_cat, params.min_leaf_size, max_depth)
    never = np.full(len(raw[0]), np.inf)
    return _compact(raw, never, 0.0, is_cat, feature_names, class_names)


def train_cart(X, y, params: CartParams = CartParams(), is_categorical=None, n_categories=None,
               n_classes=None, rng=None, feature_names=(), class_names=()) -> DecisionTree:
    """Grow a CART tree and, if ``params.prune``, cost-complexity prune it.

    The penalty is picked among the geometric midpoints of the full tree's
    pruning sequence by ``prune_folds``-fold cross-validation on the training
    rows: minimum misclassification count, largest penalty (smallest tree) on
    ties.  ``rng`` drives the internal fold assignment.
    """
    X, y, is_cat, n_cat, k = _as_inputs(X, y, is_categorical, n_categories, n_classes)
    if len(X) == 0:
        raise ValueError("cannot train a tree on zero rows")
    max_depth = -1 if params.max_depth is None else params.max_depth
    raw = _grow(X, y, k, is_cat, n_cat, params.min_leaf_size, max_depth)
    feature, threshold, catmask, left, right, parent, counts, _ = raw
    never = np.full(len(feature), np.inf)
    if not params.prune or len(feature) == 1:
        return _compact(raw, never, 0.0, is_cat, feature_names, class_names)

    alpha, seq = _prune_alphas(left, right, parent, counts, float(len(y)))
    betas = np.unique(np.concatenate([[0.0], seq]))
    probes = np.append(np.sqrt(betas[:-1] * betas[1:]), betas[-1])

    rng = np.random.default_rng(0) if rng is None else rng
    fold_of = _cv_folds(y, params.prune_folds, rng)
    errors = np.zeros(len(probes), dtype=np.int64)
    for v in range(params.prune_folds):
        test = fold_of == v
        if not test.any() or test.all():
            continue
        Xtr, ytr = X[~test], y[~test]
        sub = _grow(Xtr, ytr, k, is_cat, n_cat, params.min_leaf_size, max_depth)
        s_alpha, _ = _prune_alphas(sub[3], sub[4], sub[5], sub[6], float(len(ytr)))
        leaf_cls = np.argmax(sub[6], axis=1)
        Xte, yte = np.ascontiguousarray(X[test]), y[test]
        for j, a in enumerate(probes):
            reached = _route(Xte, sub[0], sub[1], sub[2], sub[3], sub[4], is_cat, s_alpha, a)
            errors[j] += int(np.sum(leaf_cls[reached] != yte))
    best = np.flatnonzero(errors == errors.min())[-1]
    return _compact(raw, alpha, betas[best], is_cat, feature_names, class_names)


def predict_cart(tree: DecisionTree, X) -> np.ndarray:
    """Majority class of the leaf each row reaches (ties to the lowest class)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    used = tree.feature[tree.feature >= 0]
    if used.size and X.shape[1] <= used.max():
        raise ValueError(f"row has {X.shape[1]} features; tree tests feature {used.max()}")
    if used.size and np.isnan(X[:, np.unique(used)]).any():
        raise ValueError("row is missing a feature the tree tests")
    return tree.predict(X)


class CartClassifier:
    def __init__(self, params: CartParams = CartParams()):
        self.params = params
        self.tree_ = None

    def fit(self, X, y, n_classes, is_categorical, n_categories, rng=None):
        self.tree_ = train_cart(X, y, self.params, is_categorical, n_categories, n_classes, rng=rng)
        return self

    def predict(self, X):
        return self.tree_.predict(X)
