import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wrapperfs.classifiers import KnnClassifier, KnnParams, knn_predict
from wrapperfs.classifiers.knn import encode, nearest


def table_oracle(train, labels, query, k, n_classes, metric="city-block", weighting="squared-inverse"):
    """Plain-Python weighted vote from a full distance table."""
    out = []
    for q in query:
        rows = []
        for j, t in enumerate(train):
            diff = [abs(a - b) for a, b in zip(q, t)]
            d = sum(diff) if metric == "city-block" else sum(x * x for x in diff) ** 0.5
            rows.append((d, j))
        rows.sort()
        chosen = rows[:k]
        zero = [j for d, j in chosen if d == 0]
        score = [0.0] * n_classes
        if zero:
            for j in zero:
                score[labels[j]] += 1
        else:
            for d, j in chosen:
                score[labels[j]] += 1.0 if weighting == "uniform" else 1.0 / (d * d)
        out.append(max(range(n_classes), key=lambda c: (score[c], -c)))
    return out


def test_zero_distance_returns_label():
    X = np.array([[0.0, 1], [3, 4], [5, 5]])
    y = np.array([2, 0, 1])
    assert knn_predict(X, y, KnnParams(k=1), X, 3).tolist() == [2, 0, 1]


def test_hand_weights():
    # weights 1 vs 1/81 with query 1 between 0 and 10
    X = np.array([[0.0], [10.0]])
    assert knn_predict(X, np.array([0, 1]), KnnParams(k=2, scaling="none"), np.array([[1.0]])).tolist() == [0]


@pytest.mark.parametrize("metric", ["city-block", "euclidean"])
@pytest.mark.parametrize("weighting", ["squared-inverse", "uniform"])
def test_matches_distance_table(metric, weighting):
    rng = np.random.default_rng(8)
    X = np.round(rng.uniform(0, 1, (30, 3)), 1)  # coarse grid forces distance ties
    y = np.repeat([0, 1, 2], 10)
    Q = np.round(rng.uniform(0, 1, (20, 3)), 1)
    p = KnnParams(k=6, metric=metric, weighting=weighting, scaling="none")
    got = knn_predict(X, y, p, Q, 3).tolist()
    assert got == table_oracle(X.tolist(), y.tolist(), Q.tolist(), 6, 3, metric, weighting)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 8))
def test_order_invariance(seed, k):
    # continuous coordinates, so no two training rows tie at the k-th distance
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (25, 2))
    y = rng.integers(0, 3, 25)
    Q = np.vstack([rng.uniform(0, 1, (8, 2)), X[:2]])
    perm = rng.permutation(25)
    p = KnnParams(k=k)
    a = knn_predict(X, y, p, Q, 3)
    b = knn_predict(X[perm], y[perm], p, Q, 3)
    assert np.array_equal(a, b)


def test_duplicate_rows_resolve_by_training_index():
    X = np.array([[1.0], [1.0], [5.0]])
    p = KnnParams(k=1, scaling="none")
    assert knn_predict(X, np.array([1, 0, 1]), p, np.array([[1.2]]), 2).tolist() == [1]
    assert knn_predict(X, np.array([0, 1, 1]), p, np.array([[1.2]]), 2).tolist() == [0]


def test_nearest_breaks_ties_by_index():
    D = np.array([[1.0, 0.5, 1.0, 1.0, 0.2]])
    assert nearest(D, 3).tolist() == [[4, 1, 0]]
    assert nearest(D, 5).tolist() == [[4, 1, 0, 2, 3]]


def test_one_hot_mismatch_costs_two():
    X = np.array([[0.0], [2.0]])
    E = encode(X, np.array([True]), np.array([3]))
    assert np.abs(E[0] - E[1]).sum() == 2.0


def test_minmax_uses_training_range():
    X = np.array([[0.0, 0], [10, 100]])
    model = KnnClassifier(KnnParams(k=1)).fit(X, np.array([0, 1]), 2)
    # nearer to the second row once both axes share a [0, 1] range; nearer the first in raw units
    assert model.predict(np.array([[7.0, 40.0]])).tolist() == [1]
    raw = KnnClassifier(KnnParams(k=1, scaling="none")).fit(X, np.array([0, 1]), 2)
    assert raw.predict(np.array([[7.0, 40.0]])).tolist() == [0]


def test_k_larger_than_training_set():
    with pytest.raises(ValueError):
        knn_predict(np.zeros((3, 1)), np.array([0, 1, 0]), KnnParams(k=4), np.zeros((1, 1)))


def test_dimension_mismatch():
    model = KnnClassifier(KnnParams(k=1)).fit(np.zeros((3, 2)), np.array([0, 1, 0]), 2)
    with pytest.raises(ValueError):
        model.predict(np.zeros((1, 3)))


def test_params_validation():
    for bad in [dict(k=0), dict(metric="cosine"), dict(weighting="inverse"), dict(scaling="z")]:
        with pytest.raises(ValueError):
            KnnParams(**bad)
