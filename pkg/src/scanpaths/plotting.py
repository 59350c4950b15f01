"""Figure output: the three-panel view of a scanpath on a stimulus.

Panel 1 is the untouched stimulus, panel 2 the accumulated memory mask as a
heatmap with the numbered fixation sequence drawn on top, panel 3 the final
perceived image — produced by the same foveation code the models see, not a
re-implementation, so what is plotted is exactly what the attention network
looked at.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless: commands render straight to files
import matplotlib.pyplot as plt
import numpy as np
import torch

from .data import Scanpath, save_image
from .foveation import FoveationConfig, image_to_tensor, init_state, tensor_to_image, update_state

__all__ = ["replay_scanpath", "render_scanpath_panels", "plot_training_curve"]


def replay_scanpath(stimulus: np.ndarray, scanpath: Scanpath, config: FoveationConfig):
    """Run the perceptual state over a recorded scanpath; returns the final state."""
    tensor = image_to_tensor(stimulus)
    state = init_state(tensor, config)
    with torch.no_grad():
        for xi in scanpath.fixations:
            state = update_state(state, torch.as_tensor(xi, dtype=tensor.dtype))
    return state


def render_scanpath_panels(
    stimulus: np.ndarray,
    scanpath: Scanpath,
    config: FoveationConfig,
    output_dir: str | Path,
    stem: str,
) -> list[Path]:
    """Write the three panels for one stimulus; returns the three file paths."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    state = replay_scanpath(stimulus, scanpath, config)
    h, w = stimulus.shape[:2]

    original_path = save_image(output_dir / f"{stem}_original.png", stimulus)

    mask = state.mask.numpy()
    fig, ax = plt.subplots(figsize=(5, 5 * h / w))
    ax.imshow(mask, cmap="magma", vmin=0.0, vmax=1.0, extent=(0, w, h, 0))
    pix = scanpath.fixations * np.array([w, h])
    ax.plot(pix[:, 0], pix[:, 1], "-", color="deepskyblue", linewidth=1.2, alpha=0.8)
    for i, (x, y) in enumerate(pix, start=1):
        ax.plot(x, y, "o", color="deepskyblue", markersize=4)
        ax.annotate(
            str(i),
            (x, y),
            textcoords="offset points",
            xytext=(4, 4),
            color="white",
            fontsize=9,
            fontweight="bold",
        )
    ax.set_xlim(0, w)
    ax.set_ylim(h, 0)
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_title("memory mask + fixations")
    heatmap_path = output_dir / f"{stem}_mask.png"
    fig.savefig(heatmap_path, dpi=150, bbox_inches="tight")
    plt.close(fig)

    perceived_path = save_image(output_dir / f"{stem}_perceived.png", tensor_to_image(state.perceived))
    return [original_path, heatmap_path, perceived_path]


def plot_training_curve(values: list[float], label: str, path: str | Path) -> Path:
    """Simple per-epoch loss curve, for a quick glance at training health."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(range(len(values)), values, marker="o")
    ax.set_xlabel("epoch")
    ax.set_ylabel(label)
    ax.grid(alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
