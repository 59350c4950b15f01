"""
Baseline scanpath generators
============================

The three reference generators every comparison needs: uniform random
fixations, centre-biased fixations, and a bottom-up saliency map scanned by
winner-take-all with inhibition of return. Ends with the leave-one-out
agreement among simulated observers, which bounds how well any generator
can possibly score.

Run:  python3 demos/baseline_scanpaths.py
"""

from pathlib import Path

import numpy as np

from scanpaths import (
    GridSpec,
    center_scanpath,
    human_baseline,
    make_synthetic_dataset,
    normalize_record,
    random_scanpath,
    reference_scanpaths,
    saliency_itti_lite,
    save_image,
    wta_scanpath,
)

out = Path(__file__).parent / "output" / "baseline_scanpaths"
out.mkdir(parents=True, exist_ok=True)

sample = make_synthetic_dataset(1, seed=11, image_size=64)[0]
save_image(out / "stimulus.png", sample.stimulus)
print(f"stimulus: {sample.meta['shape']} at {tuple(round(c, 2) for c in sample.meta['center'])}")

# Random and centre-biased paths ignore the image content; they only need
# its size and a seed. The centre baseline samples a truncated Gaussian
# around (0.5, 0.5).
h, w = sample.stimulus.shape[:2]
rand = random_scanpath(h, w, length=5, seed=0)
cent = center_scanpath(h, w, length=5, seed=0)
print("random :", np.round(rand.fixations, 2).tolist())
print("center :", np.round(cent.fixations, 2).tolist())

# The saliency baseline actually looks at the image: centre-surround
# contrast over intensity and colour channels, collapsed to one map.
sal = saliency_itti_lite(sample.stimulus)
save_image(out / "saliency.png", sal.values[..., None] / max(sal.values.max(), 1e-9))
peak = np.unravel_index(sal.values.argmax(), sal.values.shape)
print(f"saliency peak at pixel (row, col) = {tuple(int(v) for v in peak)}")

# Winner-take-all reads fixations off the map, suppressing a disc around
# each one so the path moves on instead of staring.
wta = wta_scanpath(sal, length=5, ior_radius=0.15)
print("wta    :", np.round(wta.fixations, 2).tolist())
print("         (first fixation should sit on the shape)")

# --- How consistent are observers with each other? ---------------------------
# Score each simulated observer against the others, leave-one-out. Generated
# scanpaths are later judged against the same observers, so this is the
# "human ceiling" row in any comparison table.
samples = make_synthetic_dataset(6, seed=3)
ids = [f"img-{i}" for i in range(len(samples))]
records = reference_scanpaths(samples, ids, n_subjects=4, length=8, seed=5)
human = {}
for rec in records:
    human.setdefault(rec.image_id, []).append(normalize_record(rec))

grid = GridSpec(rows=8, cols=8)
for metric in ("sed", "sbtde"):
    per_image = human_baseline(human, metric, length=8, grid=grid, max_k=5)
    mean = float(np.mean(list(per_image.values())))
    print(f"observer agreement, {metric}: {mean:.3f} averaged over {len(per_image)} images")
