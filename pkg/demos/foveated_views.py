"""
Foveated views and perceptual memory
====================================

Builds one synthetic stimulus, fixates it a few times, and writes out what
the attention network would actually see: the blurred periphery, the sharp
foveal blend, and the decaying memory mask.

Run:  python3 demos/foveated_views.py
"""

from pathlib import Path

import torch

from scanpaths import (
    FoveationConfig,
    blur_stimulus,
    foveate,
    image_to_tensor,
    init_state,
    make_synthetic_dataset,
    save_image,
    tensor_to_image,
    update_state,
)

out = Path(__file__).parent / "output" / "foveated_views"
out.mkdir(parents=True, exist_ok=True)

# One 64 px synthetic image so the blur is clearly visible.
sample = make_synthetic_dataset(1, seed=4, image_size=64)[0]
print(f"stimulus: a bright {sample.meta['shape']} in quadrant {sample.meta['quadrant']}, "
      f"centre {tuple(round(c, 2) for c in sample.meta['center'])}")
stimulus = image_to_tensor(sample.stimulus)
save_image(out / "original.png", sample.stimulus)

config = FoveationConfig(sigma_fovea=0.12, sigma_blur=0.08, gamma=0.5)

# The periphery: everything low-passed.
coarse = blur_stimulus(stimulus, config.sigma_blur)
save_image(out / "coarse.png", tensor_to_image(coarse))

# A single fixation on the object centre: sharp there, coarse elsewhere.
cx, cy = sample.meta["center"]
view = foveate(stimulus, coarse, (cx, cy), config)
save_image(out / "single_fixation.png", tensor_to_image(view))

# Now a short scanpath with memory. Each fixation leaves a decaying trace,
# so earlier locations stay partially sharp.
fixations = [(0.2, 0.2), (0.8, 0.2), (cx, cy)]
state = init_state(stimulus, config)
for t, xi in enumerate(fixations):
    state = update_state(state, torch.tensor(xi))
    print(f"after fixation {t + 1} at ({xi[0]:.2f}, {xi[1]:.2f}): "
          f"mask peak {float(state.mask.max()):.3f}, mask mean {float(state.mask.mean()):.4f}")
save_image(out / "memory_mask.png", state.mask.unsqueeze(-1).numpy())
save_image(out / "perceived_after_3.png", tensor_to_image(state.perceived))

# gamma = 0 forgets instantly: the perceived image is exactly the single-step
# foveation of the last fixation, bit for bit.
no_memory = FoveationConfig(sigma_fovea=0.12, sigma_blur=0.08, gamma=0.0)
state0 = init_state(stimulus, no_memory)
for xi in fixations:
    state0 = update_state(state0, torch.tensor(xi))
single = foveate(stimulus, state0.coarse, torch.tensor(fixations[-1]), no_memory)
print("gamma=0 memory identical to single foveation:", torch.equal(state0.perceived, single))

print(f"wrote images to {out}")
