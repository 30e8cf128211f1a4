import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wrapperfs.classifiers import ClassifierSpec
from wrapperfs.data import FeatureSubset, load_builtin
from wrapperfs.eval import (AccuracyEstimate, EvalConfig, StratificationError, cross_val_accuracy,
                            folds_for_repeat, repeated_cv, stratified_folds)

from conftest import numeric_dataset


def assert_stratified(fa, labels, folds):
    labels = np.asarray(labels)
    assert sorted(np.unique(fa.fold_of_sample)) == list(range(folds))
    sizes = fa.sizes()
    assert sizes.max() - sizes.min() <= 1
    counts = fa.class_counts(labels)
    assert np.all(counts.max(axis=1) - counts.min(axis=1) <= 1)
    # every sample lands in exactly one fold
    members = np.concatenate([np.flatnonzero(fa.test_mask(k)) for k in range(folds)])
    assert sorted(members.tolist()) == list(range(len(labels)))


def test_exact_divisibility():
    labels = np.array([0] * 10 + [1] * 10)
    fa = stratified_folds(labels, 5, np.random.default_rng(0))
    assert np.all(fa.class_counts(labels) == 2)


def test_segmentation_six_per_class():
    y = load_builtin("segmentation").y
    fa = stratified_folds(y, 5, np.random.default_rng(1))
    assert np.all(fa.class_counts(y) == 6)


def test_stratification_over_1000_label_vectors():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n_classes = int(rng.integers(2, 8))
        sizes = rng.integers(5, 40, n_classes)
        labels = rng.permutation(np.repeat(np.arange(n_classes), sizes))
        folds = int(rng.integers(2, 6))
        assert_stratified(stratified_folds(labels, folds, rng), labels, folds)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=2, max_size=80), st.integers(2, 6), st.integers(0, 2**32))
def test_non_strict_folds_property(labels, folds, seed):
    labels = np.array(labels)
    if len(labels) < folds or len(np.unique(labels)) < 1:
        return
    fa = stratified_folds(labels, folds, np.random.default_rng(seed), strict=False)
    assert_stratified(fa, labels, folds)


def test_small_class_rejected_when_strict():
    labels = np.array([0] * 10 + [1] * 3)
    with pytest.raises(StratificationError):
        stratified_folds(labels, 5, np.random.default_rng(0))
    with pytest.raises(StratificationError):
        EvalConfig().check(labels)


def test_folds_depend_only_on_seed_and_repeat():
    y = load_builtin("wine").y
    cfg = EvalConfig(seed=7)
    a = folds_for_repeat(y, cfg, 3).fold_of_sample
    folds_for_repeat(y, cfg, 0)
    b = folds_for_repeat(y, cfg, 3).fold_of_sample
    assert np.array_equal(a, b)
    assert not np.array_equal(a, folds_for_repeat(y, cfg, 4).fold_of_sample)


def test_majority_classifier_accuracy():
    # 341 of 1590 samples in the largest class
    y = np.array([0] * 341 + [1] * 340 + [2] * 300 + [3] * 309 + [4] * 300)
    d = numeric_dataset(np.random.default_rng(0).normal(size=(len(y), 2)), y)
    cfg = EvalConfig(classifier=ClassifierSpec("majority"), repeats=3)
    est = repeated_cv(d, [0, 1], cfg)
    one_sample = 100 / len(y)
    for a in est.run_accuracies:
        assert abs(a - 100 * 341 / 1590) <= one_sample + 1e-9


def test_label_feature_cart_is_perfect(label_copy_dataset):
    cfg = EvalConfig(repeats=2)
    fa = folds_for_repeat(label_copy_dataset.y, cfg, 0)
    assert cross_val_accuracy(label_copy_dataset, [0], cfg, fa) == 100.0


def test_one_nn_matches_distance_table():
    rng = np.random.default_rng(5)
    X = rng.integers(0, 10, size=(20, 2)).astype(float)
    y = rng.integers(0, 2, 20)
    y[:2] = [0, 1]
    d = numeric_dataset(X, y)
    spec = ClassifierSpec.make_knn(k=1, scaling="none")
    cfg = EvalConfig(repeats=1, classifier=spec, strict_strata=False)
    fa = folds_for_repeat(d.y, cfg, 0)
    correct = 0
    for i in range(20):
        train = np.flatnonzero(fa.fold_of_sample != fa.fold_of_sample[i])
        dist = [(np.abs(X[i] - X[j]).sum(), j) for j in train]
        nearest = min(dist)[1]
        correct += d.y[nearest] == d.y[i]
    assert cross_val_accuracy(d, [0, 1], cfg, fa) == pytest.approx(100 * correct / 20, abs=1e-12)


def test_single_repeat_has_zero_std():
    d = load_builtin("wine")
    est = repeated_cv(d, FeatureSubset.all(d), EvalConfig(repeats=1))
    assert est.std == 0.0 and est.mean == est.run_accuracies[0]


def test_mean_and_std_arithmetic():
    d = load_builtin("wine")
    est = repeated_cv(d, [0, 6, 9], EvalConfig(repeats=7, classifier=ClassifierSpec("knn")))
    runs = est.run_accuracies
    assert len(runs) == 7 and all(0 <= a <= 100 for a in runs)
    assert est.mean == math.fsum(runs) / 7
    assert est.std == pytest.approx(float(np.std(runs)), abs=1e-12)


def test_repeated_cv_deterministic_across_threads():
    d = load_builtin("wine")
    cfg = EvalConfig(repeats=6, seed=11)
    a = repeated_cv(d, FeatureSubset.all(d), cfg)
    b = repeated_cv(d, FeatureSubset.all(d), cfg)
    c = repeated_cv(d, FeatureSubset.all(d), EvalConfig(repeats=6, seed=11, threads=3))
    assert a == b == c


def test_leaked_label_never_hurts():
    for name in ["wine", "sonar", "hepatitis"]:
        d = load_builtin(name)
        leaked = numeric_dataset(np.column_stack([np.nan_to_num(d.matrix), d.y]), d.y)
        cfg = EvalConfig(repeats=2, seed=1)
        base = repeated_cv(leaked, list(range(d.n_features)), cfg).mean
        assert repeated_cv(leaked, list(range(d.n_features + 1)), cfg).mean >= base


def test_estimate_str():
    assert str(AccuracyEstimate.from_runs([90.0, 92.0])) == "91.0000±1.0000"


def test_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(folds=1)
    with pytest.raises(ValueError):
        EvalConfig(repeats=0)
