"""
Training an attention network and generating scanpaths
======================================================

End-to-end run at demo scale: fit a shape classifier on clean images, then
train the attention network to pick fixations that keep that (frozen)
classifier accurate on what it actually perceives, and finally roll out
scanpaths on held-out images.

Takes roughly half a minute on a laptop CPU.

Run:  python3 demos/train_and_generate.py
"""

from pathlib import Path

from scanpaths import (
    AttentionTrainConfig,
    FoveationConfig,
    TaskTrainConfig,
    first_fixation_quadrant_rate,
    generate_scanpath,
    make_synthetic_dataset,
    new_attention_model,
    rollout_loss,
    train_attention,
    train_classifier,
)
from scanpaths.plotting import plot_training_curve, render_scanpath_panels

out = Path(__file__).parent / "output" / "train_and_generate"
out.mkdir(parents=True, exist_ok=True)

# A small slice of the synthetic shapes dataset. 1000 training images is
# about the minimum for the attention network to latch on; the test suite
# uses 2000 for its tighter thresholds.
data = make_synthetic_dataset(1100, seed=7)
train_set, test_set = data[:1000], data[1000:]

# Step 1: the task model. It only ever sees clean images here.
task = train_classifier(train_set, TaskTrainConfig(seed=0))
print(f"classifier val accuracy: {task.history['val_accuracy']:.3f}")

# Step 2: the attention network. The classifier's weights are frozen; the
# loss reaches the attention parameters only through where it chose to look.
foveation = FoveationConfig(sigma_fovea=0.12, sigma_blur=0.10, gamma=0.3)
attn = new_attention_model(in_channels=3, seed=0, foveation=foveation)
attn = train_attention(
    attn,
    task,
    train_set,
    AttentionTrainConfig(horizon=5, epochs=6, seed=0, foveation=foveation),
)
curve = attn.history["train_loss"]
print(f"attention loss per epoch: {[round(v, 3) for v in curve]}")
plot_training_curve(curve, "rollout loss", out / "attention_loss.png")

# Did looking help? Compare the trained policy against random fixations on
# held-out images, using the same frozen classifier as the judge.
trained = rollout_loss(task, test_set, attn, horizon=5, foveation=foveation)
random_ = rollout_loss(task, test_set, "random", horizon=5, foveation=foveation)
print(f"held-out rollout loss: trained {trained:.3f} vs random {random_:.3f}")

# The synthetic dataset has one object per image, so a cheap sanity check is
# how often the very first fixation lands in the object's quadrant (chance
# would be 0.25).
rate = first_fixation_quadrant_rate(attn, test_set)
print(f"first fixation hits the object quadrant {rate:.0%} of the time")

# Step 3: generation. The task model is out of the loop now; a frozen
# attention model makes the scanpath a pure function of the stimulus.
sample = test_set[0]
path = generate_scanpath(attn, sample.stimulus, length=8, stimulus_id="demo-0")
print("scanpath (normalised x, y):")
for t, (x, y) in enumerate(path.fixations):
    print(f"  {t}: ({x:.3f}, {y:.3f})")
print(f"object centre was {tuple(round(c, 3) for c in sample.meta['center'])}")

# Three panels: the stimulus, where the memory mask ended up, and the
# perceived image after replaying the scanpath.
files = render_scanpath_panels(sample.stimulus, path, foveation, out, "demo-0")
print("wrote", *[f.name for f in files])
print(f"figures under {out}")
