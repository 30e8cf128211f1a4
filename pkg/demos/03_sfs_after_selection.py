"""
Shrinking a selected subset with sequential forward selection
=============================================================

The influence/lifting selector keeps every feature that helped at its step,
which can leave more features than needed.  Running plain forward selection
over that shortlist shows how accuracy grows, peaks and then falls as the
remaining features are forced in.
"""

from wrapperfs import ClassifierSpec, EvalConfig, load_builtin, select
from wrapperfs.reports import alias_legend, sfs_best_table, sfs_curve
from wrapperfs.sfs import best_subset, sfs_search

d = load_builtin("segmentation")
cfg = EvalConfig(repeats=20, seed=0, classifier=ClassifierSpec.make_knn())

shortlist = select(d, cfg).selected
print(f"shortlist of {len(shortlist)}: {', '.join(shortlist.names(d))}")

trace = sfs_search(d, shortlist, cfg)
print(alias_legend(trace, d.feature_names).render("md"))
print(sfs_best_table(trace, d.feature_names).render("md"))

subset, est = best_subset(trace)
print(f"best: {len(subset)} features, {est}: {', '.join(subset.names(d))}")

# %%
# A crude text plot of the best-accuracy curve.
for size, acc in ((int(r[0]), float(r[1])) for r in sfs_curve(trace).rows):
    print(f"{size:3d} {acc:8.4f} " + "#" * int(max(acc - 80, 0) * 2))
