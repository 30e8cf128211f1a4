"""Tabular classification datasets: loading, validation, imputation, scaling
and feature-subset projection.

A :class:`Dataset` is an immutable bundle of named feature columns plus a
label vector.  Every column can be viewed through a single float "code"
matrix (:attr:`Dataset.matrix`): numeric columns hold their values, categorical
columns hold the index of the category in the column alphabet, and missing
cells are ``nan``.  The evaluation engine and the classifiers only ever see
that matrix.
"""

from __future__ import annotations

import csv
import functools
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class DataError(ValueError):
    """Raised for malformed input files or invalid dataset operations."""


@dataclass(frozen=True, eq=False)
class FeatureColumn:
    """One feature column.

    ``values`` is a float array for numeric columns (``nan`` where missing)
    and a string array for categorical ones (``""`` where missing).
    """

    name: str
    kind: str
    values: np.ndarray
    missing_mask: np.ndarray
    categories: tuple = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if len(self.values) != len(self.missing_mask):
            raise DataError(f"column {self.name!r}: mask length mismatch")
        if self.kind == NUMERIC:
            present = self.values[~self.missing_mask]
            if not np.all(np.isfinite(present)):
                raise DataError(f"column {self.name!r}: non-finite numeric value")
        else:
            alphabet = set(self.categories)
            bad = {v for v, m in zip(self.values, self.missing_mask) if not m and v not in alphabet}
            if bad:
                raise DataError(f"column {self.name!r}: values {sorted(bad)} outside alphabet")

    @classmethod
    def numeric(cls, name: str, values, missing_mask=None) -> "FeatureColumn":
        vals = np.asarray(values, dtype=float).copy()
        if missing_mask is None:
            missing_mask = np.isnan(vals)
        mask = np.asarray(missing_mask, dtype=bool).copy()
        vals[mask] = np.nan
        vals.flags.writeable = False
        mask.flags.writeable = False
        return cls(name, NUMERIC, vals, mask)

    @classmethod
    def categorical(cls, name: str, values, missing_mask=None, categories=None) -> "FeatureColumn":
        vals = np.array([str(v) for v in values], dtype=object)
        if missing_mask is None:
            missing_mask = vals == ""
        mask = np.asarray(missing_mask, dtype=bool).copy()
        vals[mask] = ""
        if categories is None:
            categories = sorted({v for v, m in zip(vals, mask) if not m})
        vals.flags.writeable = False
        mask.flags.writeable = False
        return cls(name, CATEGORICAL, vals, mask, tuple(categories))

    def __len__(self):
        return len(self.values)

    @functools.cached_property
    def codes(self) -> np.ndarray:
        """Float view: numeric values or category indices, ``nan`` when missing."""
        if self.kind == NUMERIC:
            return self.values
        lookup = {c: i for i, c in enumerate(self.categories)}
        out = np.array([np.nan if m else lookup[v] for v, m in zip(self.values, self.missing_mask)],
                       dtype=float)
        out.flags.writeable = False
        return out

    def equals(self, other: "FeatureColumn") -> bool:
        if not isinstance(other, FeatureColumn):
            return False
        if (self.name, self.kind, self.categories) != (other.name, other.kind, other.categories):
            return False
        if not np.array_equal(self.missing_mask, other.missing_mask):
            return False
        if self.kind == NUMERIC:
            return np.array_equal(self.values, other.values, equal_nan=True)
        return bool(np.all(self.values == other.values))

    __eq__ = equals
    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    features: tuple
    labels: np.ndarray
    class_names: tuple = ()

    def __post_init__(self):
        labels = np.array([str(v) for v in self.labels], dtype=object)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "features", tuple(self.features))
        if not self.class_names:
            object.__setattr__(self, "class_names", tuple(sorted(set(labels))))
        else:
            object.__setattr__(self, "class_names", tuple(self.class_names))
        missing = set(labels) - set(self.class_names)
        if missing:
            raise DataError(f"labels {sorted(missing)} not among class_names")
        if len(set(labels)) < 2:
            raise DataError(f"dataset {self.name!r}: label column has fewer than 2 classes")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataError(f"dataset {self.name!r}: duplicate feature names")
        for f in self.features:
            if len(f) != len(labels):
                raise DataError(f"column {f.name!r} has {len(f)} cells, expected {len(labels)}")

    @property
    def n_samples(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def feature_names(self) -> list:
        return [f.name for f in self.features]

    @functools.cached_property
    def y(self) -> np.ndarray:
        """Labels as indices into :attr:`class_names`."""
        lookup = {c: i for i, c in enumerate(self.class_names)}
        out = np.array([lookup[v] for v in self.labels], dtype=np.int64)
        out.flags.writeable = False
        return out

    @functools.cached_property
    def matrix(self) -> np.ndarray:
        if not self.features:
            out = np.empty((self.n_samples, 0))
        else:
            out = np.column_stack([f.codes for f in self.features]).astype(float)
        out.flags.writeable = False
        return out

    @functools.cached_property
    def is_categorical(self) -> np.ndarray:
        return np.array([f.kind == CATEGORICAL for f in self.features], dtype=bool)

    @functools.cached_property
    def n_categories(self) -> np.ndarray:
        return np.array([len(f.categories) for f in self.features], dtype=np.int64)

    @property
    def missing_count(self) -> int:
        return int(sum(f.missing_mask.sum() for f in self.features))

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise DataError(f"no feature named {name!r} in {self.name!r}") from None

    def equals(self, other: "Dataset") -> bool:
        return (
            isinstance(other, Dataset)
            and self.class_names == other.class_names
            and self.n_features == other.n_features
            and bool(np.all(self.labels == other.labels))
            and all(a.equals(b) for a, b in zip(self.features, other.features))
        )

    __eq__ = equals
    __hash__ = None

    def __repr__(self):
        return (f"Dataset({self.name!r}, samples={self.n_samples}, "
                f"features={self.n_features}, classes={self.n_classes})")


@dataclass(frozen=True)
class FeatureSubset:
    """An ordered selection of feature indices of one dataset."""

    dataset_name: str
    indices: tuple

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(set(self.indices)) != len(self.indices):
            raise DataError(f"duplicate feature index in subset {self.indices}")

    @classmethod
    def all(cls, d: Dataset) -> "FeatureSubset":
        return cls(d.name, tuple(range(d.n_features)))

    def check(self, d: Dataset) -> None:
        for i in self.indices:
            if not 0 <= i < d.n_features:
                raise DataError(f"feature index {i} out of range for {d.n_features} features")

    def names(self, d: Dataset) -> list:
        return [d.features[i].name for i in self.indices]

    def without(self, i: int) -> "FeatureSubset":
        return FeatureSubset(self.dataset_name, tuple(j for j in self.indices if j != i))

    def plus(self, i: int) -> "FeatureSubset":
        return FeatureSubset(self.dataset_name, self.indices + (int(i),))

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def as_subset(d: Dataset, s) -> FeatureSubset:
    if s is None:
        return FeatureSubset.all(d)
    if not isinstance(s, FeatureSubset):
        s = FeatureSubset(d.name, tuple(s))
    s.check(d)
    return s


# --------------------------------------------------------------------------
# CSV input / output


@dataclass(frozen=True)
class Schema:
    """Column-role declaration for :func:`load_csv`.

    Columns not listed in ``categorical`` are parsed as numeric.
    """

    label: str = "class"
    categorical: frozenset = field(default_factory=frozenset)
    missing: str = "?"
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "categorical", frozenset(self.categorical))


def load_csv(path, schema: Schema | None = None) -> Dataset:
    """Read a header-row CSV into a :class:`Dataset`.

    Empty cells and cells equal to ``schema.missing`` are recorded in the
    missing mask.  Raises :class:`DataError` on ragged rows, an unknown label
    column, a single-class label column or an unparseable numeric cell.
    """
    schema = schema or Schema()
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if schema.label not in header:
        raise DataError(f"{path}: label column {schema.label!r} not in header")
    if header.count(schema.label) > 1:
        raise DataError(f"{path}: label column {schema.label!r} appears more than once")
    unknown = schema.categorical - set(header)
    if unknown:
        raise DataError(f"{path}: categorical columns {sorted(unknown)} not in header")
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}: line {lineno} has {len(r)} cells, header has {len(header)}")
    if not body:
        raise DataError(f"{path}: no data rows")

    def is_missing(cell):
        return cell == "" or cell == schema.missing

    label_col = header.index(schema.label)
    labels = [r[label_col].strip() for r in body]
    for lineno, lab in enumerate(labels, start=2):
        if is_missing(lab):
            raise DataError(f"{path}: missing label at line {lineno}")

    features = []
    for j, name in enumerate(header):
        if j == label_col:
            continue
        cells = [r[j].strip() for r in body]
        mask = np.array([is_missing(c) for c in cells], dtype=bool)
        if name in schema.categorical:
            features.append(FeatureColumn.categorical(name, ["" if m else c for c, m in zip(cells, mask)], mask))
            continue
        vals = np.full(len(cells), np.nan)
        for i, (c, m) in enumerate(zip(cells, mask)):
            if m:
                continue
            try:
                v = float(c)
            except ValueError:
                raise DataError(f"{path}: line {i + 2}, column {name!r}: "
                                f"cannot parse {c!r} as a number") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: line {i + 2}, column {name!r}: non-finite value {c!r}")
            vals[i] = v
        features.append(FeatureColumn.numeric(name, vals, mask))
    name = schema.name or os.path.splitext(os.path.basename(str(path)))[0]
    return Dataset(name, tuple(features), np.array(labels, dtype=object))


def write_csv(d: Dataset, path, label: str = "class", missing: str = "?") -> None:
    """Write ``d`` so that :func:`load_csv` reads it back value-identically."""
    header = d.feature_names + [label]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(d.n_samples):
            row = []
            for f in d.features:
                if f.missing_mask[i]:
                    row.append(missing)
                elif f.kind == NUMERIC:
                    row.append(repr(float(f.values[i])))
                else:
                    row.append(f.values[i])
            row.append(d.labels[i])
            w.writerow(row)


# --------------------------------------------------------------------------
# imputation and scaling


def fill_values(X: np.ndarray, is_categorical: np.ndarray) -> np.ndarray:
    """Per-column fill statistic: median for numeric, mode for categorical codes.

    Mode ties resolve to the lowest category code.  Raises :class:`DataError`
    if some column has no observed value at all.
    """
    fills = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        col = X[:, j]
        seen = col[~np.isnan(col)]
        if seen.size == 0:
            raise DataError(f"column {j} is entirely missing; no statistic computable")
        if is_categorical[j]:
            vals, counts = np.unique(seen, return_counts=True)
            fills[j] = vals[np.argmax(counts)]
        else:
            fills[j] = np.median(seen)
    return fills


def apply_fill(X: np.ndarray, fills: np.ndarray) -> np.ndarray:
    holes = np.isnan(X)
    if not holes.any():
        return X
    out = X.copy()
    rows, cols = np.nonzero(holes)
    out[rows, cols] = fills[cols]
    return out


def impute_missing(d: Dataset, policy: str = "median-mode") -> Dataset:
    """Return a copy of ``d`` without missing cells.

    ``median-mode`` fills numeric cells with the column median and categorical
    cells with the column mode; ``drop-rows`` removes every row that has a
    missing cell.
    """
    if policy == "drop-rows":
        keep = np.ones(d.n_samples, dtype=bool)
        for f in d.features:
            keep &= ~f.missing_mask
        labels = d.labels[keep]
        if len(set(labels)) < 2:
            raise DataError(f"drop-rows leaves fewer than 2 classes in {d.name!r}")
        return _take_rows(d, np.flatnonzero(keep))
    if policy != "median-mode":
        raise DataError(f"unknown missing-value policy {policy!r}")
    if d.missing_count == 0:
        return d
    fills = fill_values(d.matrix, d.is_categorical)
    cols = []
    for j, f in enumerate(d.features):
        mask = np.zeros(len(f), dtype=bool)
        if f.kind == NUMERIC:
            vals = np.where(f.missing_mask, fills[j], f.values)
            cols.append(FeatureColumn.numeric(f.name, vals, mask))
        else:
            vals = np.where(f.missing_mask, f.categories[int(fills[j])], f.values)
            cols.append(FeatureColumn.categorical(f.name, vals, mask, f.categories))
    return Dataset(d.name, tuple(cols), d.labels, d.class_names)


def _take_rows(d: Dataset, rows: np.ndarray) -> Dataset:
    cols = []
    for f in d.features:
        if f.kind == NUMERIC:
            cols.append(FeatureColumn.numeric(f.name, f.values[rows], f.missing_mask[rows]))
        else:
            cols.append(FeatureColumn.categorical(f.name, f.values[rows], f.missing_mask[rows], f.categories))
    return Dataset(d.name, tuple(cols), d.labels[rows], d.class_names)


@dataclass(frozen=True)
class ScalingStats:
    """Per-column minimum and maximum (``nan`` for categorical columns)."""

    low: np.ndarray
    high: np.ndarray


def minmax_fit(X: np.ndarray, is_categorical: np.ndarray | None = None) -> ScalingStats:
    low = X.min(axis=0) if len(X) else np.zeros(X.shape[1])
    high = X.max(axis=0) if len(X) else np.zeros(X.shape[1])
    if is_categorical is not None:
        low = np.where(is_categorical, np.nan, low)
        high = np.where(is_categorical, np.nan, high)
    return ScalingStats(low, high)


def minmax_apply(X: np.ndarray, stats: ScalingStats) -> np.ndarray:
    """Affine map of every numeric column onto the fitted [low, high] -> [0, 1].

    Constant columns map to 0.  Categorical columns (``nan`` stats) pass through.
    """
    span = stats.high - stats.low
    numeric = ~np.isnan(span)
    out = X.astype(float, copy=True)
    scale = np.where(numeric & (span > 0), span, 1.0)
    shifted = (X - np.where(numeric, stats.low, 0.0)) / scale
    out[:, numeric] = shifted[:, numeric]
    const = numeric & (span == 0)
    out[:, const] = 0.0
    return out


def normalize(d: Dataset, method: str = "min-max", stats: ScalingStats | None = None):
    """Scale the numeric columns of ``d``.

    Returns ``(dataset, stats)``.  Pass the ``stats`` of a training fold to
    transform a test fold with training statistics only.
    """
    if d.missing_count:
        raise DataError("normalize requires a dataset without missing cells")
    if method == "none":
        return d, minmax_fit(d.matrix, d.is_categorical)
    if method != "min-max":
        raise DataError(f"unknown normalization method {method!r}")
    if stats is None:
        stats = minmax_fit(d.matrix, d.is_categorical)
    X = minmax_apply(d.matrix, stats)
    cols = [FeatureColumn.numeric(f.name, X[:, j]) if f.kind == NUMERIC else f
            for j, f in enumerate(d.features)]
    return Dataset(d.name, tuple(cols), d.labels, d.class_names), stats


def project(d: Dataset, s) -> Dataset:
    """Dataset restricted to the columns of ``s``, in ``s``'s order."""
    s = as_subset(d, s)
    return Dataset(d.name, tuple(d.features[i] for i in s.indices), d.labels, d.class_names)


# --------------------------------------------------------------------------
# bundled datasets


def make_waveform(n_samples: int = 5000, seed: int = 0, noise: float = 1.0) -> Dataset:
    """Breiman's waveform generator: 21 noisy convex mixtures of two of three
    shifted triangular waves, three equiprobable classes."""
    rng = np.random.default_rng(seed)
    i = np.arange(1, 22)
    h1 = np.maximum(6 - np.abs(i - 11), 0)
    h2 = np.maximum(6 - np.abs(i - 15), 0)
    h3 = np.maximum(6 - np.abs(i - 7), 0)
    pairs = [(h1, h2), (h1, h3), (h2, h3)]
    labels = rng.integers(0, 3, n_samples)
    u = rng.random(n_samples)[:, None]
    base = np.stack([pairs[c][0] for c in labels]) * u + np.stack([pairs[c][1] for c in labels]) * (1 - u)
    X = np.round(base + noise * rng.standard_normal((n_samples, 21)), 2)
    cols = tuple(FeatureColumn.numeric(f"x{j + 1}", X[:, j]) for j in range(21))
    return Dataset("waveform", cols, np.array([f"wave{c}" for c in labels], dtype=object))


_HEPATITIS_BINARY = ("sex", "steroid", "antivirals", "fatigue", "malaise", "anorexia",
                     "liver-big", "liver-firm", "spleen-palpable", "spiders", "ascites",
                     "varices", "histology")

BUILTIN = {
    "zoo": Schema(name="zoo"),
    "wine": Schema(name="wine"),
    "sonar": Schema(name="sonar"),
    "waveform": Schema(name="waveform"),
    "ionosphere": Schema(name="ionosphere"),
    "segmentation": Schema(name="segmentation"),
    "hepatitis": Schema(name="hepatitis", categorical=frozenset(_HEPATITIS_BINARY)),
}


def builtin_path(name: str) -> str:
    if name not in BUILTIN:
        raise DataError(f"unknown builtin dataset {name!r}; choose from {sorted(BUILTIN)}")
    return str(resources.files("wrapperfs") / "datasets" / f"{name}.csv")


def load_builtin(name: str) -> Dataset:
    """Load one of the bundled UCI datasets (see ``BUILTIN``)."""
    return load_csv(builtin_path(name), BUILTIN[name])


def concat_columns(columns: Iterable[FeatureColumn], labels: Sequence, name: str = "data") -> Dataset:
    return Dataset(name, tuple(columns), np.asarray(labels, dtype=object))
