"""Report tables for selection runs and their text serializations.

A :class:`Table` is a list of column names plus rows of already-formatted
cells.  Accuracies are percent with 4 decimals, so writing the same results
twice gives byte-identical files in every format.

Stable CSV columns
------------------
evaluate   dataset, classifier, features, mean, std, repeats
summary    dataset, classifier, features_before, before_mean, before_std,
           after_mean, after_std, features_after, selected
influence  rank, feature, accuracy_without, influence, remain
lifting    step, feature, accuracy, lifting, kept
lift_curve step, accuracy
sfs_best   size, accuracy, std, combination
sfs_log    step, feature, accuracy, std, chosen
sfs_curve  size, accuracy
"""

from __future__ import annotations

import csv
import io
import json
import string
from dataclasses import dataclass, field

FORMATS = ("csv", "md", "jsonl")


def pct(x: float) -> str:
    return f"{x:.4f}"


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *cells) -> None:
        if len(cells) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} cells, got {len(cells)}")
        self.rows.append([str(c) for c in cells])

    def column(self, name: str) -> list:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def render(self, fmt: str = "csv") -> str:
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.columns)
            w.writerows(self.rows)
            return buf.getvalue()
        if fmt == "md":
            lines = ["| " + " | ".join(self.columns) + " |",
                     "|" + "|".join("---" for _ in self.columns) + "|"]
            lines += ["| " + " | ".join(c.replace("|", "\\|") for c in r) + " |" for r in self.rows]
            return "\n".join(lines) + "\n"
        if fmt == "jsonl":
            return "".join(json.dumps(dict(zip(self.columns, r))) + "\n" for r in self.rows)
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")


def parse_table(text: str, fmt: str, name: str = "") -> Table:
    """Inverse of :meth:`Table.render` (cells come back as strings)."""
    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(text)))
        return Table(name, rows[0] if rows else [], rows[1:])
    if fmt == "md":
        lines = [ln for ln in text.splitlines() if ln.startswith("|")]
        split = lambda ln: [c.strip().replace("\\|", "|") for c in ln.strip()[1:-1].split(" | ")]  # noqa: E731
        if not lines:
            return Table(name, [])
        return Table(name, split(lines[0]), [split(ln) for ln in lines[2:]])
    if fmt == "jsonl":
        recs = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
        cols = list(recs[0]) if recs else []
        return Table(name, cols, [[str(r[c]) for c in cols] for r in recs])
    raise ValueError(f"unknown format {fmt!r}")


def evaluate_table(dataset: str, classifier: str, n_features: int, est) -> Table:
    t = Table("evaluate", ["dataset", "classifier", "features", "mean", "std", "repeats"])
    t.add(dataset, classifier, n_features, pct(est.mean), pct(est.std), est.repeats)
    return t


def summary_table(rows) -> Table:
    """Before/after comparison; ``rows`` holds (dataset, classifier, SelectionResult, names)."""
    t = Table("summary", ["dataset", "classifier", "features_before", "before_mean", "before_std",
                         "after_mean", "after_std", "features_after", "selected"])
    for dataset, classifier, res, names in rows:
        t.add(dataset, classifier, res.sizes[0], pct(res.before.mean), pct(res.before.std),
              pct(res.after.mean), pct(res.after.std), res.sizes[1], " ".join(names))
    return t


def influence_table(report) -> Table:
    """Ranked influence coefficients; removed features come last with remain = no."""
    t = Table("influence", ["rank", "feature", "accuracy_without", "influence", "remain"])
    for rank, e in enumerate(report.table_order(), 1):
        t.add(rank, e.name, pct(e.estimate.mean), pct(e.influence), "no" if e.removed else "yes")
    return t


def lifting_table(report) -> Table:
    t = Table("lifting", ["step", "feature", "accuracy", "lifting", "kept"])
    for i, s in enumerate(report.steps, 1):
        t.add(i, s.name, pct(s.accuracy), pct(s.lift), "yes" if s.kept else "no")
    return t


def lift_curve(report) -> Table:
    t = Table("lift_curve", ["step", "accuracy"])
    for i, s in enumerate(report.steps, 1):
        t.add(i, pct(s.accuracy))
    return t


def default_aliases(n: int) -> list:
    """a, b, ..., z, then aa, ab, ..."""
    letters = string.ascii_lowercase
    out = []
    for i in range(n):
        out.append(letters[i] if i < 26 else letters[i // 26 - 1] + letters[i % 26])
    return out


def _alias_map(trace, names, aliases):
    pool = list(trace.candidate_pool.indices)
    aliases = list(aliases) if aliases else default_aliases(len(pool))
    if len(aliases) < len(pool):
        raise ValueError(f"{len(pool)} pool features but only {len(aliases)} aliases")
    return {f: aliases[k] for k, f in enumerate(pool)}


def sfs_best_table(trace, names, aliases=None) -> Table:
    """Best accuracy per subset size with the subset written as an alias string.

    ``names`` maps dataset feature index to name; aliases follow pool order.
    """
    amap = _alias_map(trace, names, aliases)
    sep = "" if all(len(a) == 1 for a in amap.values()) else "+"
    t = Table("sfs_best", ["size", "accuracy", "std", "combination"])
    for s in trace.steps:
        combo = sep.join(sorted(amap[f] for f in s.subset.indices))
        t.add(s.step, pct(s.estimate.mean), pct(s.estimate.std), combo)
    return t


def alias_legend(trace, names, aliases=None) -> Table:
    amap = _alias_map(trace, names, aliases)
    t = Table("aliases", ["alias", "feature"])
    for f, a in amap.items():
        t.add(a, names[f])
    return t


def sfs_log(trace, names) -> Table:
    t = Table("sfs_log", ["step", "feature", "accuracy", "std", "chosen"])
    for s in trace.steps:
        for f in sorted(s.candidates):
            e = s.candidates[f]
            t.add(s.step, names[f], pct(e.mean), pct(e.std), "yes" if f == s.chosen else "no")
    return t


def sfs_curve(trace) -> Table:
    t = Table("sfs_curve", ["size", "accuracy"])
    for size, acc in trace.curve():
        t.add(size, pct(acc))
    return t
