"""Two-pass wrapper feature selection.

Pass 1 scores every feature by how much the cross-validated accuracy moves
when that feature alone is left out (the influence coefficient), drops the
features whose removal *raises* accuracy by more than the baseline's standard
deviation, and ranks the survivors, most harmful-to-remove first.

Pass 2 walks that ranking, growing a prefix one feature at a time and keeping
a feature only when adding it lifts the mean accuracy above the previous
prefix (the lifting coefficient).

All accuracies and coefficients are in percentage points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .data import Dataset, FeatureSubset, as_subset
from .eval import AccuracyEstimate, EvalConfig, repeated_cv

log = logging.getLogger(__name__)

CUMULATIVE = "cumulative"
REVERT = "revert"


class SelectionError(RuntimeError):
    pass


class AllFeaturesRemovedError(SelectionError):
    """Every feature exceeded the removal threshold."""

    def __init__(self, report: "InfluenceReport"):
        super().__init__(f"all {len(report.entries)} features have influence above "
                         f"the threshold {report.threshold:.4f}")
        self.report = report


class NoFeatureKeptError(SelectionError):
    """No step of the forward recursion had a positive lift."""

    def __init__(self, report: "LiftingReport", best_prefix: FeatureSubset):
        super().__init__("no feature has a positive lifting coefficient; "
                         f"best prefix is {list(best_prefix.indices)}")
        self.report = report
        self.best_prefix = best_prefix


@dataclass(frozen=True)
class InfluenceEntry:
    index: int
    name: str
    estimate: AccuracyEstimate
    influence: float
    removed: bool


@dataclass(frozen=True)
class InfluenceReport:
    baseline: AccuracyEstimate
    entries: tuple
    ranked_order: FeatureSubset
    threshold: float

    def entry(self, index: int) -> InfluenceEntry:
        return next(e for e in self.entries if e.index == index)

    def table_order(self) -> list:
        """Entries as tabulated: survivors ascending by influence, then the removed ones."""
        key = lambda e: (e.influence, e.index)  # noqa: E731
        kept = sorted((e for e in self.entries if not e.removed), key=key)
        gone = sorted((e for e in self.entries if e.removed), key=key)
        return kept + gone


@dataclass(frozen=True)
class LiftingStep:
    index: int
    name: str
    estimate: AccuracyEstimate
    lift: float
    kept: bool

    @property
    def accuracy(self) -> float:
        return self.estimate.mean


@dataclass(frozen=True)
class LiftingReport:
    steps: tuple
    selected: FeatureSubset
    selected_estimate: AccuracyEstimate
    mode: str = CUMULATIVE


@dataclass(frozen=True)
class SelectionResult:
    influence: InfluenceReport
    lifting: LiftingReport
    before: AccuracyEstimate
    after: AccuracyEstimate
    sizes: tuple

    @property
    def selected(self) -> FeatureSubset:
        return self.lifting.selected


def influence_rank(d: Dataset, cfg: EvalConfig, threshold: float | None = None,
                   raise_on_empty: bool = True) -> InfluenceReport:
    """Leave-one-feature-out influence coefficients and the filtered ranking.

    ``influence_i = mean(without i) - mean(all)``.  Features with
    ``influence_i > threshold`` are dropped; the threshold defaults to the
    baseline's standard deviation.  Runs ``n_features + 1`` repeated CVs, all
    on the same per-repeat folds.
    """
    if d.n_features < 2:
        raise SelectionError("influence ranking needs at least 2 features")
    full = FeatureSubset.all(d)
    baseline = repeated_cv(d, full, cfg)
    sigma = baseline.std if threshold is None else float(threshold)
    log.info("baseline %s on %d features", baseline, d.n_features)
    entries = []
    for i in range(d.n_features):
        est = repeated_cv(d, full.without(i), cfg)
        influence = est.mean - baseline.mean
        entries.append(InfluenceEntry(i, d.features[i].name, est, influence, influence > sigma))
        log.debug("without %s: %s (I=%+.4f)", d.features[i].name, est, influence)
    kept = sorted((e for e in entries if not e.removed), key=lambda e: (e.influence, e.index))
    report = InfluenceReport(baseline, tuple(entries),
                             FeatureSubset(d.name, tuple(e.index for e in kept)), sigma)
    if not kept and raise_on_empty:
        raise AllFeaturesRemovedError(report)
    return report


def lifting_select(d: Dataset, ranked, cfg: EvalConfig, mode: str = CUMULATIVE,
                   raise_on_empty: bool = True) -> LiftingReport:
    """Forward recursion over ``ranked`` with lifting coefficients.

    In ``cumulative`` mode step ``i`` evaluates the first ``i`` ranked
    features whether or not earlier ones were kept, and
    ``lift_i = acc_i - acc_{i-1}`` with ``acc_0 = 0``.  The kept features are
    then re-evaluated together.  In ``revert`` mode a rejected feature is
    taken back out before the next step, so each step extends the kept set.
    """
    ranked = as_subset(d, ranked)
    if not len(ranked):
        raise SelectionError("ranked feature list is empty")
    if mode not in (CUMULATIVE, REVERT):
        raise ValueError(f"unknown lifting mode {mode!r}")
    steps = []
    previous = 0.0
    kept_est = None
    prefix = FeatureSubset(d.name, ())
    kept = FeatureSubset(d.name, ())
    for i in ranked.indices:
        trial = prefix.plus(i) if mode == CUMULATIVE else kept.plus(i)
        est = repeated_cv(d, trial, cfg)
        lift = est.mean - previous
        ok = lift > 0
        steps.append(LiftingStep(i, d.features[i].name, est, lift, ok))
        log.debug("+%s: %s (P=%+.4f)%s", d.features[i].name, est, lift, "" if ok else " rejected")
        if mode == CUMULATIVE:
            prefix = trial
            previous = est.mean
        if ok:
            kept = kept.plus(i)
            if mode == REVERT:
                previous = est.mean
                kept_est = est
    if not len(kept):
        best = max(range(len(steps)), key=lambda j: (steps[j].accuracy, -j))
        report = LiftingReport(tuple(steps), kept, steps[best].estimate, mode)
        if raise_on_empty:
            raise NoFeatureKeptError(report, FeatureSubset(d.name, ranked.indices[:best + 1]))
        return report
    if mode == CUMULATIVE:
        kept_est = repeated_cv(d, kept, cfg)
    return LiftingReport(tuple(steps), kept, kept_est, mode)


def select(d: Dataset, cfg: EvalConfig, mode: str = CUMULATIVE) -> SelectionResult:
    """Influence ranking followed by lifting selection, with before/after estimates."""
    influence = influence_rank(d, cfg)
    lifting = lifting_select(d, influence.ranked_order, cfg, mode=mode)
    return SelectionResult(influence, lifting, influence.baseline, lifting.selected_estimate,
                           (d.n_features, len(lifting.selected)))
