"""Wrapper feature selection by influence and lifting coefficients.

Typical use::

    from wrapperfs import ClassifierSpec, EvalConfig, load_builtin, select

    d = load_builtin("wine")
    res = select(d, EvalConfig(repeats=20, classifier=ClassifierSpec.make_cart()))
    print(res.before, "->", res.after, res.selected.names(d))
"""

__version__ = "0.1.0"

from .classifiers import CartParams, ClassifierSpec, KnnParams, register_classifier
from .data import (Dataset, FeatureColumn, FeatureSubset, Schema, impute_missing, load_builtin,
                   load_csv, normalize, project, write_csv)
from .eval import AccuracyEstimate, EvalConfig, cross_val_accuracy, repeated_cv, stratified_folds
from .sfs import SfsTrace, best_subset, sfs_search
from .wrapper import (InfluenceReport, LiftingReport, SelectionResult, influence_rank,
                      lifting_select, select)

__all__ = [
    "AccuracyEstimate", "CartParams", "ClassifierSpec", "Dataset", "EvalConfig", "FeatureColumn",
    "FeatureSubset", "InfluenceReport", "KnnParams", "LiftingReport", "Schema", "SelectionResult",
    "SfsTrace", "best_subset", "cross_val_accuracy", "impute_missing", "influence_rank",
    "lifting_select", "load_builtin", "load_csv", "normalize", "project", "register_classifier",
    "repeated_cv", "select", "sfs_search", "stratified_folds", "write_csv",
]
