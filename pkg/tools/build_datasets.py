"""Regenerate the bundled CSV datasets from their upstream distributions.

The UCI archive is not always reachable, so the raw files are taken from
PyPI distributions that vendor them:

    Orange3 (wheel)              Orange/datasets/zoo.tab,
                                 Orange/tests/datasets/ionosphere.tab
    keel_ds 0.2.5 (wheel)        keel_ds/data/balanced/raw/{sonar,segment}.dat
    imbalanced_databases 0.1.1   imbalanced_databases/data/hepatitis/hepatitis.data.txt
    scikit-learn                 load_wine()

Waveform is synthesised with :func:`wrapperfs.data.make_waveform`.

Usage::

    pip download Orange3 keel-ds imbalanced-databases --no-deps -d wheels/
    python tools/build_datasets.py wheels/
"""

import csv
import glob
import io
import os
import sys
import zipfile

import numpy as np

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "wrapperfs", "datasets")

SEGMENT_NAMES = [
    "region-centroid-col", "region-centroid-row", "region-pixel-count",
    "short-line-density-5", "short-line-density-2", "vedge-mean", "vegde-sd",
    "hedge-mean", "hedge-sd", "intensity-mean", "rawred-mean", "rawblue-mean",
    "rawgreen-mean", "exred-mean", "exblue-mean", "exgreen-mean", "value-mean",
    "saturation-mean", "hue-mean",
]
SEGMENT_PER_CLASS = 30
SEGMENT_SEED = 1990

HEPATITIS_NAMES = [
    "class", "age", "sex", "steroid", "antivirals", "fatigue", "malaise",
    "anorexia", "liver-big", "liver-firm", "spleen-palpable", "spiders",
    "ascites", "varices", "bilirubin", "alk-phosphate", "sgot", "albumin",
    "protime", "histology",
]


def _wheel(pattern, wheels):
    hits = glob.glob(os.path.join(wheels, pattern))
    if not hits:
        sys.exit(f"missing wheel matching {pattern} in {wheels}")
    return zipfile.ZipFile(hits[0])


def _write(name, header, rows):
    path = os.path.join(OUT, f"{name}.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"{name}: {len(rows)} rows, {len(header) - 1} features -> {path}")


def _orange_tab(text, drop_meta=True):
    lines = text.splitlines()
    names = lines[0].split("\t")
    flags = lines[2].split("\t") + [""] * len(names)
    keep = [i for i, f in enumerate(flags[: len(names)]) if not (drop_meta and f == "meta")]
    cls = [i for i in keep if flags[i] == "class"][0]
    feats = [i for i in keep if i != cls]
    header = [names[i] for i in feats] + ["class"]
    rows = []
    for line in lines[3:]:
        if not line.strip():
            continue
        cells = line.split("\t")
        rows.append([cells[i] for i in feats] + [cells[cls]])
    return header, rows


def _keel_raw(text):
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("@"):
            rows.append([c.strip() for c in line.split(",")])
    return rows


def main(wheels):
    os.makedirs(OUT, exist_ok=True)
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
    from wrapperfs.data import make_waveform, write_csv

    orange = _wheel("orange3-*.whl", wheels)
    _write("zoo", *_orange_tab(orange.read("Orange/datasets/zoo.tab").decode()))
    header, rows = _orange_tab(orange.read("Orange/tests/datasets/ionosphere.tab").decode())
    _write("ionosphere", header, rows)

    keel = _wheel("keel_ds-*.whl", wheels)
    rows = _keel_raw(keel.read("keel_ds/data/balanced/raw/sonar.dat").decode())
    _write("sonar", [f"band{i + 1}" for i in range(60)] + ["class"], rows)

    rows = _keel_raw(keel.read("keel_ds/data/balanced/raw/segment.dat").decode())
    labels = np.array([r[-1] for r in rows])
    rng = np.random.default_rng(SEGMENT_SEED)
    picked = []
    for c in sorted(set(labels)):
        idx = np.flatnonzero(labels == c)
        picked.extend(sorted(rng.choice(idx, SEGMENT_PER_CLASS, replace=False).tolist()))
    rows = [rows[i] for i in sorted(picked)]
    _write("segmentation", SEGMENT_NAMES + ["class"], rows)

    imb = _wheel("imbalanced_databases-*.whl", wheels)
    raw = imb.read("imbalanced_databases/data/hepatitis/hepatitis.data.txt").decode()
    rows = [r for r in csv.reader(io.StringIO(raw)) if r]
    # move the class column to the end
    rows = [r[1:] + [{"1": "die", "2": "live"}[r[0]]] for r in rows]
    _write("hepatitis", HEPATITIS_NAMES[1:] + ["class"], rows)

    from sklearn.datasets import load_wine

    wine = load_wine()
    rows = [[repr(float(v)) for v in x] + [f"class{int(t) + 1}"] for x, t in zip(wine.data, wine.target)]
    _write("wine", [n.replace("/", "-") for n in wine.feature_names] + ["class"], rows)

    write_csv(make_waveform(5000, seed=21), os.path.join(OUT, "waveform.csv"))
    print("waveform: 5000 rows, 21 features")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "wheels")
