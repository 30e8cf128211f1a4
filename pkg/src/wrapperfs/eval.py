"""Stratified k-fold cross-validation and repeated accuracy estimation.

Seeding
-------
Repeat ``r`` of a run with seed ``s`` draws its fold assignment from
``numpy.random.default_rng(SeedSequence([s mod 2**64, r]))``.  The fold
assignment therefore depends only on ``(s, r)`` and the label vector, which
makes every feature subset evaluated under the same config share its folds
(paired comparison) and keeps results independent of scheduling.  Any
randomness inside a classifier (CART's pruning folds) is drawn from
``SeedSequence([s, r, fold])``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .classifiers import ClassifierSpec
from .data import Dataset, apply_fill, as_subset, fill_values

SEED_MASK = (1 << 64) - 1


class EvaluationError(RuntimeError):
    """A classifier failed inside cross-validation."""


class StratificationError(ValueError):
    """Folds cannot be stratified for the given labels."""


@dataclass(frozen=True)
class EvalConfig:
    """Cross-validation protocol.

    ``strict_strata`` rejects label vectors with a class smaller than
    ``folds``; with it off such classes are spread one sample per fold, which
    still keeps per-class fold counts within one of each other.
    ``threads`` only affects scheduling, never results.
    """

    folds: int = 5
    repeats: int = 100
    seed: int = 0
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    strict_strata: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def check(self, labels) -> None:
        labels = np.asarray(labels)
        if len(labels) < self.folds:
            raise StratificationError(f"{len(labels)} samples cannot fill {self.folds} folds")
        if self.strict_strata:
            _, counts = np.unique(labels, return_counts=True)
            if counts.min() < self.folds:
                raise StratificationError(
                    f"smallest class has {counts.min()} samples, fewer than {self.folds} folds "
                    "(set strict_strata=False to allow it)")

    def with_seed(self, seed: int) -> "EvalConfig":
        return replace(self, seed=seed)


def repeat_seed(seed: int, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed & SEED_MASK, *keys])


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed of ``seed`` for the integer path ``keys``."""
    return int(repeat_seed(seed, *keys).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of_sample: np.ndarray
    folds: int

    def __post_init__(self):
        self.fold_of_sample.flags.writeable = False

    def test_mask(self, k: int) -> np.ndarray:
        return self.fold_of_sample == k

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of_sample, minlength=self.folds)

    def class_counts(self, labels) -> np.ndarray:
        """Matrix (classes x folds) of per-class fold sizes."""
        labels = np.asarray(labels)
        classes = np.unique(labels)
        return np.array([np.bincount(self.fold_of_sample[labels == c], minlength=self.folds)
                         for c in classes])


def stratified_folds(labels, folds: int, rng: np.random.Generator, strict: bool = True) -> FoldAssignment:
    """Random stratified fold assignment.

    Each class is shuffled and the classes are laid end to end; sample ``i`` of
    that sequence goes to fold ``i mod folds``.  Per-class and overall fold
    sizes then differ by at most one.
    """
    labels = np.asarray(labels)
    if folds < 2:
        raise StratificationError("folds must be >= 2")
    if len(labels) < folds:
        raise StratificationError(f"{len(labels)} samples cannot fill {folds} folds")
    classes, counts = np.unique(labels, return_counts=True)
    if strict and counts.min() < folds:
        small = classes[np.argmin(counts)]
        raise StratificationError(f"class {small!r} has {counts.min()} samples, fewer than {folds} folds")
    order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in classes])
    out = np.empty(len(labels), dtype=np.int64)
    out[order] = np.arange(len(labels)) % folds
    return FoldAssignment(out, folds)


def folds_for_repeat(labels, cfg: EvalConfig, r: int) -> FoldAssignment:
    rng = np.random.default_rng(repeat_seed(cfg.seed, r))
    return stratified_folds(labels, cfg.folds, rng, strict=cfg.strict_strata)


@dataclass(frozen=True)
class AccuracyEstimate:
    """Mean and population standard deviation of per-repeat CV accuracies (percent)."""

    mean: float
    std: float
    run_accuracies: tuple
    repeats: int

    @classmethod
    def from_runs(cls, runs) -> "AccuracyEstimate":
        runs = tuple(float(a) for a in runs)
        if not runs:
            raise ValueError("no run accuracies")
        n = len(runs)
        mean = math.fsum(runs) / n
        std = math.sqrt(math.fsum((a - mean) ** 2 for a in runs) / n)
        return cls(mean, std, runs, n)

    def __str__(self):
        return f"{self.mean:.4f}±{self.std:.4f}"


def cross_val_accuracy(d: Dataset, s, cfg: EvalConfig, fa: FoldAssignment, entropy=None) -> float:
    """Accuracy (percent) of one k-fold pass over the folds in ``fa``.

    Missing cells are imputed per fold with training-fold medians/modes; any
    scaling is fitted by the classifier on its training fold.
    """
    s = as_subset(d, s)
    if len(fa.fold_of_sample) != d.n_samples:
        raise ValueError("fold assignment does not match the dataset")
    entropy = (cfg.seed,) if entropy is None else tuple(entropy)
    cols = list(s.indices)
    X = d.matrix[:, cols]
    is_cat = d.is_categorical[cols]
    n_cat = d.n_categories[cols]
    y = d.y
    has_missing = bool(np.isnan(X).any())
    correct = 0
    for k in range(fa.folds):
        test = fa.test_mask(k)
        if not test.any():
            continue
        Xtr, Xte = X[~test], X[test]
        if has_missing:
            fills = fill_values(Xtr, is_cat)
            Xtr, Xte = apply_fill(Xtr, fills), apply_fill(Xte, fills)
        rng = np.random.default_rng(repeat_seed(entropy[0], *entropy[1:], k))
        try:
            model = cfg.classifier.build().fit(Xtr, y[~test], d.n_classes, is_cat, n_cat, rng)
            pred = model.predict(Xte)
        except Exception as exc:
            raise EvaluationError(f"fold {k}: {cfg.classifier.kind} failed: {exc}") from exc
        correct += int(np.sum(pred == y[test]))
    return 100.0 * correct / d.n_samples


def repeated_cv(d: Dataset, s, cfg: EvalConfig) -> AccuracyEstimate:
    """``cfg.repeats`` independent stratified CV passes, aggregated."""
    s = as_subset(d, s)
    cfg.check(d.y)

    def one(r):
        fa = folds_for_repeat(d.y, cfg, r)
        return cross_val_accuracy(d, s, cfg, fa, entropy=(cfg.seed, r))

    if cfg.threads > 1 and cfg.repeats > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            runs = list(pool.map(one, range(cfg.repeats)))
    else:
        runs = [one(r) for r in range(cfg.repeats)]
    return AccuracyEstimate.from_runs(runs)
