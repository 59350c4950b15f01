"""
Scanpath metrics, step by step
==============================

Shows what the two comparison metrics actually compute, on sequences small
enough to check by hand: grid quantisation, string edit distance (SED),
the time-delay embedding score (SBTDE), and the two ways of aggregating
over several human observers.

Run:  python3 demos/metrics_walkthrough.py
"""

import numpy as np

from scanpaths import (
    GridSpec,
    Scanpath,
    aggregate_mean,
    aggregate_spp,
    evaluate,
    quantize,
    sbtde,
    sed,
    summarize,
)

# --- Quantisation -----------------------------------------------------------
# Fixations live in normalised [0, 1]^2; a metric comparison first snaps them
# to cells of a coarse grid, row-major. On a 4x4 grid the centre (0.5, 0.5)
# falls in row 2, column 2 -> symbol 10.
grid = GridSpec(rows=4, cols=4)
path = Scanpath(np.array([[0.1, 0.1], [0.5, 0.5], [0.9, 0.9], [1.0, 0.2]]))
symbols = quantize(path, grid)
print("grid symbols:", symbols)  # [0, 10, 15, 3] -- x = 1.0 clamps into the last column

# --- SED --------------------------------------------------------------------
# Plain Levenshtein distance between two symbol strings: the number of
# insertions, deletions and substitutions to turn one into the other.
a = [0, 10, 15, 3]
b = [0, 10, 10, 15]
print(f"sed({a}, {b}) = {sed(a, b)}")  # two edits
print("identical strings:", sed(a, a))
print("against empty:", sed(a, []))  # = len(a), all insertions

# --- SBTDE ------------------------------------------------------------------
# For each window size k up to max_k, slide a k-window over the first string
# and find its best (lowest normalised Hamming distance) match among all
# k-windows of the second string, then average. It rewards shared sub-motifs
# regardless of where they occur, unlike SED which is order-global.
a = [0, 1, 2, 3]
b = [9, 0, 1, 2]  # same motif, shifted by one
print(f"sed   = {sed(a, b)} (charges the shift: one insert, one delete)")
print(f"sbtde = {sbtde(a, b, max_k=3):.4f} (0 would be a perfect motif match)")

# The score is asymmetric: every window of [0, 0] occurs in [0, 0, 5, 7],
# but not the other way around.
print("a->b:", sbtde([0, 0], [0, 0, 5, 7], max_k=2))
print("b->a:", round(sbtde([0, 0, 5, 7], [0, 0], max_k=2), 4))

# --- Aggregation over observers ----------------------------------------------
# A generated scanpath is scored once per human observer. "mean" reports the
# average score; "spp" (score per personal best) keeps only the most
# favourable observer, asking whether the scanpath resembles at least one
# human. For SED lower is better, so spp is the minimum.
scores = [2.0, 5.0, 3.0]
print(f"mean: {aggregate_mean(scores):.3f}  spp: {aggregate_spp(scores):.3f}")

# --- The full evaluation in one call ------------------------------------------
# evaluate() does all of the above per image: truncate to a common length,
# quantise, score against every observer, aggregate both ways.
gen = {"img-0": Scanpath(np.array([[0.1, 0.1], [0.6, 0.6], [0.9, 0.9]]))}
human = {
    "img-0": [
        Scanpath(np.array([[0.1, 0.15], [0.6, 0.6], [0.85, 0.9]])),   # close
        Scanpath(np.array([[0.9, 0.1], [0.4, 0.2], [0.1, 0.85]])),    # unrelated
    ]
}
rows, report = evaluate(gen, human, grid, max_k=2, length=3, method="demo")
for r in rows:
    print(f"{r.image_id}  {r.metric:5s} {r.aggregation:4s} = {r.value:.4f}")
print("dataset summary:", {k[1:]: round(v, 4) for k, v in summarize(rows).items()})
