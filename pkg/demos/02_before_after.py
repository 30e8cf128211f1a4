"""
Before/after accuracy on the bundled datasets
=============================================

Runs the full selector with both classifiers on every bundled dataset and
prints one row per run.  With 20 repeats this takes several minutes on one
core, most of it in CART on Sonar, Ionosphere and Waveform; pass a smaller
repeat count on the command line for a quick look.
"""

import sys
import time

from wrapperfs import ClassifierSpec, EvalConfig, load_builtin, select
from wrapperfs.reports import summary_table

repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 20
rows = []
for name in ["zoo", "wine", "sonar", "ionosphere", "segmentation", "hepatitis", "waveform"]:
    d = load_builtin(name)
    for kind in ("cart", "knn"):
        cfg = EvalConfig(repeats=min(repeats, 5) if name == "waveform" else repeats, seed=0,
                         classifier=ClassifierSpec(kind), strict_strata=name != "zoo")
        t0 = time.perf_counter()
        res = select(d, cfg)
        print(f"{name:13s} {kind:5s} {res.sizes[0]:3d} -> {res.sizes[1]:3d}  "
              f"{res.before} -> {res.after}  ({time.perf_counter() - t0:.0f}s)", flush=True)
        rows.append((name, kind, res, res.selected.names(d)))

print()
print(summary_table(rows).render("md"))
