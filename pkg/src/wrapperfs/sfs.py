"""Sequential forward selection with a full greedy trace."""

from __future__ import annotations

from dataclasses import dataclass

from .data import Dataset, FeatureSubset, as_subset
from .eval import AccuracyEstimate, EvalConfig, derive_seed, repeated_cv


@dataclass(frozen=True)
class SfsStep:
    step: int
    candidates: dict  # feature index -> AccuracyEstimate
    chosen: int
    subset: FeatureSubset
    estimate: AccuracyEstimate


@dataclass(frozen=True)
class SfsTrace:
    steps: tuple
    candidate_pool: FeatureSubset

    def curve(self) -> list:
        """(subset size, best accuracy) pairs."""
        return [(s.step, s.estimate.mean) for s in self.steps]


def step_config(cfg: EvalConfig, step: int) -> EvalConfig:
    """Config for greedy step ``step``: all candidates of one step share folds,
    successive steps draw fresh ones."""
    return cfg.with_seed(derive_seed(cfg.seed, 0x5F5, step))


def sfs_search(d: Dataset, pool, cfg: EvalConfig) -> SfsTrace:
    """Grow a subset from empty, adding the best remaining candidate each step
    until the pool is exhausted.  Ties go to the lowest feature index."""
    pool = as_subset(d, pool)
    if not len(pool):
        raise ValueError("candidate pool is empty")
    remaining = sorted(pool.indices)
    current = FeatureSubset(d.name, ())
    steps = []
    for j in range(1, len(pool) + 1):
        scfg = step_config(cfg, j)
        scores = {c: repeated_cv(d, current.plus(c), scfg) for c in remaining}
        chosen = max(remaining, key=lambda c: (scores[c].mean, -c))
        current = current.plus(chosen)
        remaining.remove(chosen)
        steps.append(SfsStep(j, scores, chosen, current, scores[chosen]))
    return SfsTrace(tuple(steps), pool)


def best_subset(trace: SfsTrace):
    """The traced subset with the highest mean accuracy; smaller wins ties."""
    if not trace.steps:
        raise ValueError("empty trace")
    best = max(trace.steps, key=lambda s: (s.estimate.mean, -s.step))
    return best.subset, best.estimate
