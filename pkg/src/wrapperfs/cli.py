"""Command-line experiment runner.

Experiments are described by an INI file::

    [experiment]
    pipeline = select            ; evaluate | influence | lift | select | sfs
    dataset = wine               ; bundled dataset name or CSV path
    label = class
    categorical =                ; comma-separated categorical column names
    missing = ?
    missing_policy = median-mode ; or drop-rows

    [eval]
    folds = 5
    repeats = 20
    seed = 0
    strict_strata = true

    [classifier]
    kind = knn                   ; cart | knn | majority
    k = 6
    metric = city-block
    weighting = squared-inverse
    scaling = min-max

    [lift]
    mode = cumulative            ; or revert
    ranking =                    ; explicit order for `lift`; empty = influence ranking

    [sfs]
    pool = primary               ; primary (wrapper-selected) | all | list
    features =                   ; names when pool = list
    aliases =                    ; one label per pool feature; default a, b, c, ...

    [output]
    dir =
    formats = csv                ; any of csv, md, jsonl

Every run writes its report tables into the output directory and finishes
with ``manifest.json`` (config snapshot, version, timing, file digests).

Exit codes: 0 success, 2 configuration error, 3 runtime error or report
shape mismatch, 4 comparison outside tolerance.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__, reports
from .classifiers import CartParams, ClassifierSpec, KnnParams
from .data import BUILTIN, Dataset, Schema, impute_missing, load_builtin, load_csv
from .eval import EvalConfig, repeated_cv
from .sfs import best_subset, sfs_search
from .wrapper import CUMULATIVE, REVERT, influence_rank, lifting_select, select

log = logging.getLogger("wrapperfs")

PIPELINES = ("evaluate", "influence", "lift", "select", "sfs")
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_TOLERANCE = 0, 2, 3, 4
OUT_ENV = "WRAPPERFS_OUT"
MANIFEST = "manifest.json"
_EXT = {"csv": "csv", "md": "md", "jsonl": "jsonl"}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


class RunError(RuntimeError):
    def __init__(self, message, manifest=None):
        super().__init__(message)
        self.manifest = manifest


class ShapeMismatch(RuntimeError):
    """Two runs produced reports that cannot be compared cell by cell."""


def _split(value: str) -> tuple:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _bool(key, value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _int(key, value: str, low=None) -> int:
    try:
        out = int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if low is not None and out < low:
        raise ConfigError(f"{key}: must be >= {low}, got {out}")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    pipeline: str = "select"
    label: str = "class"
    categorical: tuple = ()
    missing: str = "?"
    missing_policy: str = "median-mode"
    folds: int = 5
    repeats: int = 20
    seed: int = 0
    strict_strata: bool = True
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    lifting_mode: str = CUMULATIVE
    ranking: tuple = ()
    sfs_pool: str = "primary"
    sfs_features: tuple = ()
    sfs_aliases: tuple = ()
    out: str = ""
    formats: tuple = ("csv",)
    base_dir: str = field(default="", compare=False)

    # -- parsing ---------------------------------------------------------
    @classmethod
    def from_ini(cls, text: str, base_dir: str = "", check: bool = True) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"unparseable config: {exc}") from None
        known = {
            "experiment": {"pipeline", "dataset", "label", "categorical", "missing", "missing_policy"},
            "eval": {"folds", "repeats", "seed", "strict_strata"},
            "classifier": {"kind", "min_leaf_size", "max_depth", "prune", "prune_folds",
                           "k", "metric", "weighting", "scaling"},
            "lift": {"mode", "ranking"},
            "sfs": {"pool", "features", "aliases"},
            "output": {"dir", "formats"},
        }
        for sec in cp.sections():
            if sec not in known:
                raise ConfigError(f"[{sec}]: unknown section")
            for key in cp[sec]:
                if key not in known[sec]:
                    raise ConfigError(f"{sec}.{key}: unknown key")

        def get(sec, key, default=""):
            return cp.get(sec, key, fallback=default).strip()

        if not get("experiment", "dataset"):
            raise ConfigError("experiment.dataset: required")
        kw = dict(
            dataset=get("experiment", "dataset"),
            pipeline=get("experiment", "pipeline", "select"),
            label=get("experiment", "label", "class"),
            categorical=_split(get("experiment", "categorical")),
            missing=get("experiment", "missing", "?"),
            missing_policy=get("experiment", "missing_policy", "median-mode"),
            folds=_int("eval.folds", get("eval", "folds", "5"), 2),
            repeats=_int("eval.repeats", get("eval", "repeats", "20"), 1),
            seed=_int("eval.seed", get("eval", "seed", "0")),
            strict_strata=_bool("eval.strict_strata", get("eval", "strict_strata", "true")),
            classifier=_parse_classifier(cp["classifier"] if cp.has_section("classifier") else {}),
            lifting_mode=get("lift", "mode", CUMULATIVE),
            ranking=_split(get("lift", "ranking")),
            sfs_pool=get("sfs", "pool", "primary"),
            sfs_features=_split(get("sfs", "features")),
            sfs_aliases=_split(get("sfs", "aliases")),
            out=get("output", "dir"),
            formats=_split(get("output", "formats", "csv")),
            base_dir=base_dir,
        )
        cfg = cls(**kw)
        if check:
            cfg.check()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_ini(text, base_dir=str(path.parent))

    def to_ini(self) -> str:
        c = self.classifier
        cls_items = [("kind", c.kind)]
        if c.kind == "cart":
            p = c.cart
            cls_items += [("min_leaf_size", p.min_leaf_size),
                          ("max_depth", "" if p.max_depth is None else p.max_depth),
                          ("prune", str(p.prune).lower()), ("prune_folds", p.prune_folds)]
        elif c.kind == "knn":
            p = c.knn
            cls_items += [("k", p.k), ("metric", p.metric), ("weighting", p.weighting),
                          ("scaling", p.scaling)]
        sections = [
            ("experiment", [("pipeline", self.pipeline), ("dataset", self.dataset),
                            ("label", self.label), ("categorical", ", ".join(self.categorical)),
                            ("missing", self.missing), ("missing_policy", self.missing_policy)]),
            ("eval", [("folds", self.folds), ("repeats", self.repeats), ("seed", self.seed),
                      ("strict_strata", str(self.strict_strata).lower())]),
            ("classifier", cls_items),
            ("lift", [("mode", self.lifting_mode), ("ranking", ", ".join(self.ranking))]),
            ("sfs", [("pool", self.sfs_pool), ("features", ", ".join(self.sfs_features)),
                     ("aliases", ", ".join(self.sfs_aliases))]),
            ("output", [("dir", self.out), ("formats", ", ".join(self.formats))]),
        ]
        buf = io.StringIO()
        for name, items in sections:
            buf.write(f"[{name}]\n")
            for k, v in items:
                buf.write(f"{k} = {v}\n".replace(" = \n", " =\n"))
            buf.write("\n")
        return buf.getvalue()

    # -- validation --------------------------------------------------------
    def check(self) -> None:
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"experiment.pipeline: must be one of {PIPELINES}, got {self.pipeline!r}")
        if self.missing_policy not in ("median-mode", "drop-rows"):
            raise ConfigError(f"experiment.missing_policy: unknown policy {self.missing_policy!r}")
        if self.lifting_mode not in (CUMULATIVE, REVERT):
            raise ConfigError(f"lift.mode: must be {CUMULATIVE} or {REVERT}")
        if self.sfs_pool not in ("primary", "all", "list"):
            raise ConfigError(f"sfs.pool: must be primary, all or list, got {self.sfs_pool!r}")
        if self.sfs_pool == "list" and not self.sfs_features:
            raise ConfigError("sfs.features: required when pool = list")
        if not self.formats or any(f not in reports.FORMATS for f in self.formats):
            raise ConfigError(f"output.formats: choose from {reports.FORMATS}, got {self.formats}")
        if self.repeats < 1:
            raise ConfigError("eval.repeats: must be >= 1")
        if self.folds < 2:
            raise ConfigError("eval.folds: must be >= 2")
        self.dataset_path()

    def dataset_path(self):
        """Path of the dataset CSV, or None for a bundled dataset."""
        p = Path(self.dataset)
        if not p.is_absolute() and self.base_dir:
            p = Path(self.base_dir) / p
        if p.is_file():
            return p
        if self.dataset in BUILTIN:
            return None
        raise ConfigError(f"experiment.dataset: {self.dataset!r} is neither a file nor a bundled "
                          f"dataset ({', '.join(sorted(BUILTIN))})")

    def eval_config(self, threads: int = 1) -> EvalConfig:
        return EvalConfig(folds=self.folds, repeats=self.repeats, seed=self.seed,
                          classifier=self.classifier, strict_strata=self.strict_strata,
                          threads=threads)

    def load(self) -> Dataset:
        path = self.dataset_path()
        if path is None:
            d = load_builtin(self.dataset)
        else:
            d = load_csv(path, Schema(label=self.label, categorical=frozenset(self.categorical),
                                      missing=self.missing, name=path.stem))
        if self.missing_policy == "drop-rows":
            d = impute_missing(d, "drop-rows")
        return d


def _parse_classifier(sec) -> ClassifierSpec:
    sec = {k: v.strip() for k, v in dict(sec).items()}
    kind = sec.pop("kind", "cart") or "cart"
    cart_keys = {"min_leaf_size", "max_depth", "prune", "prune_folds"}
    knn_keys = {"k", "metric", "weighting", "scaling"}
    stray = set(sec) - (cart_keys if kind == "cart" else knn_keys if kind == "knn" else set())
    if stray:
        raise ConfigError(f"classifier.{sorted(stray)[0]}: not a parameter of kind {kind!r}")
    try:
        if kind == "cart":
            depth = sec.get("max_depth", "")
            params = CartParams(
                min_leaf_size=_int("classifier.min_leaf_size", sec.get("min_leaf_size", "1"), 1),
                max_depth=None if depth in ("", "none") else _int("classifier.max_depth", depth, 1),
                prune=_bool("classifier.prune", sec.get("prune", "true")),
                prune_folds=_int("classifier.prune_folds", sec.get("prune_folds", "5")))
            return ClassifierSpec("cart", cart=params)
        if kind == "knn":
            d = KnnParams()
            params = KnnParams(k=_int("classifier.k", sec.get("k", str(d.k)), 1),
                               metric=sec.get("metric", d.metric),
                               weighting=sec.get("weighting", d.weighting),
                               scaling=sec.get("scaling", d.scaling))
            return ClassifierSpec("knn", knn=params)
        return ClassifierSpec(kind)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"classifier: {exc}") from None


# -- running -------------------------------------------------------------

@dataclass(frozen=True)
class RunManifest:
    config: ExperimentConfig
    version: str
    seed: int
    duration: float
    files: dict  # relative path -> sha256
    status: str = "ok"
    error: str = ""
    directory: str = field(default="", compare=False)

    def to_json(self) -> str:
        return json.dumps({
            "tool": "wrapperfs", "version": self.version, "status": self.status,
            "error": self.error, "seed": self.seed, "duration_seconds": round(self.duration, 3),
            "config": self.config.to_ini(), "files": self.files,
        }, indent=2) + "\n"

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
            cfg = ExperimentConfig.from_ini(raw["config"], base_dir=str(path.parent), check=False)
        except (OSError, ValueError, KeyError) as exc:
            raise RunError(f"cannot read manifest {path}: {exc}") from None
        return cls(cfg, raw["version"], raw["seed"], raw["duration_seconds"], raw["files"],
                   raw["status"], raw.get("error", ""), str(path.parent))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _pipeline_tables(cfg: ExperimentConfig, d: Dataset, ecfg: EvalConfig) -> list:
    clf = ecfg.classifier.describe()
    names = d.feature_names

    if cfg.pipeline == "evaluate":
        return [reports.evaluate_table(d.name, clf, d.n_features,
                                       repeated_cv(d, list(range(d.n_features)), ecfg))]
    if cfg.pipeline == "influence":
        return [reports.influence_table(influence_rank(d, ecfg))]
    if cfg.pipeline == "lift":
        tables = []
        if cfg.ranking:
            ranked = [d.feature_index(n) for n in cfg.ranking]
        else:
            inf = influence_rank(d, ecfg)
            tables.append(reports.influence_table(inf))
            ranked = inf.ranked_order
        lift = lifting_select(d, ranked, ecfg, mode=cfg.lifting_mode)
        return tables + [reports.lifting_table(lift), reports.lift_curve(lift)]

    res = select(d, ecfg, mode=cfg.lifting_mode) if cfg.pipeline == "select" or cfg.sfs_pool == "primary" else None
    tables = []
    if res is not None:
        tables = [reports.summary_table([(d.name, clf, res, res.selected.names(d))]),
                  reports.influence_table(res.influence), reports.lifting_table(res.lifting),
                  reports.lift_curve(res.lifting)]
    if cfg.pipeline == "select":
        return tables
    if cfg.sfs_pool == "primary":
        pool = res.selected
    elif cfg.sfs_pool == "all":
        pool = list(range(d.n_features))
    else:
        pool = [d.feature_index(n) for n in cfg.sfs_features]
    trace = sfs_search(d, pool, ecfg)
    best, _ = best_subset(trace)
    log.info("best SFS subset: %s", best.names(d))
    return tables + [reports.sfs_best_table(trace, names, cfg.sfs_aliases),
                     reports.alias_legend(trace, names, cfg.sfs_aliases),
                     reports.sfs_log(trace, names), reports.sfs_curve(trace)]


def default_out_dir(cfg: ExperimentConfig) -> Path:
    if cfg.out:
        return Path(cfg.out)
    stem = Path(cfg.dataset).stem
    root = os.environ.get(OUT_ENV, "wrapperfs-runs")
    return Path(root) / f"{stem}-{cfg.pipeline}-{cfg.classifier.kind}-seed{cfg.seed}"


def run(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> RunManifest:
    """Execute the configured pipeline, write its reports and the manifest.

    On failure the reports written so far stay in place, the manifest is
    written with status ``failed`` and a :class:`RunError` is raised.
    """
    cfg.check()
    data_path = cfg.dataset_path()
    if data_path is not None:
        # the snapshot must not depend on where the config file lived
        cfg = replace(cfg, dataset=str(data_path.resolve()), base_dir="")
    out = Path(out_dir) if out_dir is not None else default_out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    files: dict = {}
    status, error = "ok", ""
    try:
        d = cfg.load()
        ecfg = cfg.eval_config(threads)
        for table in _pipeline_tables(cfg, d, ecfg):
            for fmt in cfg.formats:
                name = f"{table.name}.{_EXT[fmt]}"
                (out / name).write_text(table.render(fmt), encoding="utf-8")
                files[name] = sha256(out / name)
    except Exception as exc:  # recorded in the manifest, then re-raised
        status, error = "failed", f"{type(exc).__name__}: {exc}"
    manifest = RunManifest(cfg, __version__, cfg.seed, time.perf_counter() - start,
                           dict(sorted(files.items())), status, error, str(out))
    (out / MANIFEST).write_text(manifest.to_json(), encoding="utf-8")
    if status != "ok":
        raise RunError(error, manifest)
    return manifest


# -- comparing -----------------------------------------------------------

@dataclass(frozen=True)
class CellDiff:
    file: str
    row: int
    column: str
    a: str
    b: str
    delta: float  # inf for non-numeric mismatches


@dataclass(frozen=True)
class DiffReport:
    diffs: tuple
    tolerance: float

    @property
    def within_tolerance(self) -> bool:
        return all(d.delta <= self.tolerance for d in self.diffs)

    def outside(self) -> list:
        return [d for d in self.diffs if d.delta > self.tolerance]


def _read_report(directory, name):
    fmt = name.rsplit(".", 1)[-1]
    text = (Path(directory) / name).read_text(encoding="utf-8")
    return reports.parse_table(text, fmt, name)


def compare(a: RunManifest, b: RunManifest, tolerance: float = 0.0, fields=None, files=None) -> DiffReport:
    """Cell-by-cell numeric diff of two runs' reports.

    ``fields`` limits the compared columns and ``files`` the compared report
    names (without extension).  Differing numeric cells are recorded with
    their absolute difference; other differing cells get an infinite delta.
    Raises :class:`ShapeMismatch` when file sets, columns or row counts differ.
    """
    names_a = {n for n in a.files if files is None or n.rsplit(".", 1)[0] in files}
    names_b = {n for n in b.files if files is None or n.rsplit(".", 1)[0] in files}
    if names_a != names_b:
        raise ShapeMismatch(f"report sets differ: {sorted(names_a ^ names_b)}")
    diffs = []
    for name in sorted(names_a):
        if a.files[name] == b.files[name]:
            continue
        ta, tb = _read_report(a.directory, name), _read_report(b.directory, name)
        if ta.columns != tb.columns:
            raise ShapeMismatch(f"{name}: columns differ")
        if len(ta.rows) != len(tb.rows):
            raise ShapeMismatch(f"{name}: {len(ta.rows)} vs {len(tb.rows)} rows")
        cols = [c for c in ta.columns if fields is None or c in fields]
        for i, (ra, rb) in enumerate(zip(ta.rows, tb.rows)):
            for c in cols:
                j = ta.columns.index(c)
                if ra[j] == rb[j]:
                    continue
                try:
                    delta = abs(float(ra[j]) - float(rb[j]))
                except ValueError:
                    delta = math.inf
                diffs.append(CellDiff(name, i + 1, c, ra[j], rb[j], delta))
    return DiffReport(tuple(diffs), tolerance)


# -- entry point -----------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wrapperfs", description="Wrapper feature selection experiments.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in PIPELINES:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", help="experiment INI file")
        p.add_argument("--dataset", help="bundled dataset name or CSV path (overrides the config)")
        p.add_argument("--classifier", choices=["cart", "knn", "majority"],
                       help="classifier kind with default parameters (overrides the config)")
        p.add_argument("--seed", type=int)
        p.add_argument("--repeats", type=int)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--out", help=f"output directory (default: ${OUT_ENV}/<run name>)")
        p.add_argument("--format", action="append", choices=reports.FORMATS,
                       help="report format; repeat for several")
        p.add_argument("--lifting-mode", choices=[CUMULATIVE, REVERT])
        p.add_argument("--quiet", action="store_true", help="do not print the main report")
    c = sub.add_parser("compare", help="diff the reports of two runs")
    c.add_argument("a", help="manifest.json or run directory")
    c.add_argument("b")
    c.add_argument("--tolerance", type=float, default=0.0)
    c.add_argument("--fields", help="comma-separated columns to compare")
    c.add_argument("--files", help="comma-separated report names to compare")
    return ap


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    elif args.dataset:
        cfg = ExperimentConfig(dataset=args.dataset)
    else:
        raise ConfigError("--config or --dataset is required")
    over = {"pipeline": args.command}
    if args.dataset:
        over.update(dataset=args.dataset, base_dir="")
    if args.classifier:
        over["classifier"] = ClassifierSpec(args.classifier)
    if args.seed is not None:
        over["seed"] = args.seed
    if args.repeats is not None:
        over["repeats"] = args.repeats
    if args.format:
        over["formats"] = tuple(dict.fromkeys(args.format))
    if args.lifting_mode:
        over["lifting_mode"] = args.lifting_mode
    cfg = replace(cfg, **over)
    cfg.check()
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "compare":
        try:
            report = compare(RunManifest.load(args.a), RunManifest.load(args.b), args.tolerance,
                             fields=_split(args.fields) if args.fields else None,
                             files=_split(args.files) if args.files else None)
        except (RunError, ShapeMismatch) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        for d in report.diffs:
            flag = "!" if d.delta > report.tolerance else " "
            print(f"{flag} {d.file}:{d.row}:{d.column}  {d.a} -> {d.b}  (|Δ|={d.delta:.4f})")
        bad = report.outside()
        print(f"{len(report.diffs)} differing cells, {len(bad)} outside tolerance {args.tolerance}")
        return EXIT_TOLERANCE if bad else EXIT_OK

    try:
        cfg = _config_from_args(args)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads: must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run(cfg, args.out, threads=args.threads)
    except RunError as exc:
        print(f"run failed: {exc} (manifest in {exc.manifest.directory})", file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet:
        main_report = {"evaluate": "evaluate", "influence": "influence", "lift": "lifting",
                       "select": "summary", "sfs": "sfs_best"}[cfg.pipeline]
        fmt = cfg.formats[0]
        print(_read_report(manifest.directory, f"{main_report}.{_EXT[fmt]}").render("md"), end="")
        print(f"reports in {manifest.directory}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
