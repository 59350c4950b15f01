"""Reference scanpath generators and the human gold-standard score.

These are the comparison points for any learned generator: chance (uniform
random fixations), photographer/center bias (truncated Gaussian around the
image centre), and a small bottom-up saliency model read out by iterative
winner-take-all with inhibition of return.  ``human_baseline`` scores each
human observer against the remaining observers (leave-one-out), which is the
ceiling any generator is measured against.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .data import Scanpath
from .metrics import GridSpec, aggregate_mean, aggregate_spp, quantize, sbtde, sed

__all__ = [
    "SaliencyMap",
    "random_scanpath",
    "center_scanpath",
    "saliency_itti_lite",
    "wta_scanpath",
    "human_baseline",
]


def random_scanpath(h: int, w: int, length: int, seed: int, stimulus_id: str = "") -> Scanpath:
    """Chance baseline: fixations i.i.d. uniform over the unit square.

    The image size is accepted for signature parity with the other
    generators; uniform sampling in normalised coordinates does not use it.
    """
    if h < 1 or w < 1:
        raise ValueError(f"image size must be positive, got {h}x{w}")
    if length < 1:
        raise ValueError("length must be positive")
    rng = np.random.default_rng(seed)
    return Scanpath(rng.uniform(0.0, 1.0, size=(length, 2)), stimulus_id=stimulus_id)


def center_scanpath(
    h: int,
    w: int,
    length: int,
    seed: int,
    sigma_center: float = 0.15,
    stimulus_id: str = "",
) -> Scanpath:
    """Center-bias baseline: i.i.d. Gaussian around (0.5, 0.5), truncated to the unit square.

    Truncation is by rejection, so the accepted distribution is the Gaussian
    conditioned on landing inside the image rather than a clipped one with
    probability mass piled up on the border.
    """
    if h < 1 or w < 1:
        raise ValueError(f"image size must be positive, got {h}x{w}")
    if length < 1:
        raise ValueError("length must be positive")
    if not sigma_center > 0:
        raise ValueError(f"sigma_center must be positive, got {sigma_center}")
    rng = np.random.default_rng(seed)
    out = np.empty((length, 2))
    have = 0
    while have < length:
        cand = rng.normal(0.5, sigma_center, size=(max(length - have, 16), 2))
        ok = cand[((cand >= 0.0) & (cand <= 1.0)).all(axis=1)]
        take = min(len(ok), length - have)
        out[have : have + take] = ok[:take]
        have += take
    return Scanpath(out, stimulus_id=stimulus_id)


@dataclass(frozen=True)
class SaliencyMap:
    """A single-channel conspicuity map aligned with the source image."""

    values: np.ndarray  # (H, W), max-normalised to [0, 1] unless identically zero

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"saliency map must be 2-D, got shape {v.shape}")
        object.__setattr__(self, "values", v)


def saliency_itti_lite(
    stimulus: np.ndarray,
    scale_fine: float = 0.02,
    scale_coarse: float = 0.08,
) -> SaliencyMap:
    """Small bottom-up saliency model: centre-surround differences plus local contrast.

    Per channel, a difference-of-Gaussians (fine minus coarse smoothing,
    half-wave rectified) marks blob-like deviations; the intensity channel
    adds absolute local contrast against the coarse background.  Scales are
    fractions of the longer image side.  The combined map is normalised by
    its maximum; a uniform image yields an all-zero map.
    """
    arr = np.asarray(stimulus, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"expected (H, W) or (H, W, C) stimulus, got shape {arr.shape}")
    if not 0 < scale_fine < scale_coarse:
        raise ValueError("need 0 < scale_fine < scale_coarse")
    h, w, _ = arr.shape
    side = max(h, w)
    s_fine = max(scale_fine * side, 0.5)
    s_coarse = max(scale_coarse * side, 1.0)
    total = np.zeros((h, w))
    for c in range(arr.shape[2]):
        fine = ndimage.gaussian_filter(arr[:, :, c], s_fine, mode="reflect")
        coarse = ndimage.gaussian_filter(arr[:, :, c], s_coarse, mode="reflect")
        total += np.maximum(fine - coarse, 0.0)
    intensity = arr.mean(axis=2)
    background = ndimage.gaussian_filter(intensity, s_coarse, mode="reflect")
    total += np.abs(intensity - background)
    peak = total.max()
    if peak > 0:
        total = total / peak
    return SaliencyMap(total)


def wta_scanpath(
    saliency: SaliencyMap,
    length: int,
    ior_radius: float = 0.1,
    stimulus_id: str = "",
) -> Scanpath:
    """Read fixations off a saliency map by repeated argmax with inhibition of return.

    Each fixation lands on the centre of the currently most salient pixel
    (row-major first on ties), after which a disk of normalised radius
    ``ior_radius`` around it is zeroed.  If the map is exhausted (all zeros)
    remaining fixations fall back to the image centre and the scanpath is
    flagged via ``meta["degenerate"]``.
    """
    if length < 1:
        raise ValueError("length must be positive")
    if not ior_radius > 0:
        raise ValueError(f"ior_radius must be positive, got {ior_radius}")
    values = saliency.values.copy()
    h, w = values.shape
    xs = (np.arange(w) + 0.5) / w
    ys = (np.arange(h) + 0.5) / h
    fixations = np.empty((length, 2))
    degenerate = False
    for t in range(length):
        if values.max() <= 0.0:
            fixations[t] = (0.5, 0.5)
            degenerate = True
            continue
        flat = int(values.argmax())  # row-major: earliest row, then column, wins ties
        i, j = divmod(flat, w)
        fixations[t] = (xs[j], ys[i])
        dist2 = (ys[:, None] - ys[i]) ** 2 + (xs[None, :] - xs[j]) ** 2
        values[dist2 <= ior_radius**2] = 0.0
    meta = {"degenerate": True} if degenerate else {}
    return Scanpath(fixations, stimulus_id=stimulus_id, meta=meta)


def human_baseline(
    human: dict[str, list[Scanpath]],
    metric: str,
    length: int,
    grid: GridSpec,
    max_k: int = 5,
    aggregation: str = "mean",
) -> dict[str, float]:
    """Leave-one-out agreement among human observers, per image.

    Each observer's scanpath is scored against every other observer with the
    chosen metric (after truncation to ``length`` and grid quantisation) and
    aggregated like a generated scanpath would be; the image score averages
    over held-out observers.  Images with fewer than two observers are
    skipped with a warning.
    """
    if metric not in ("sed", "sbtde"):
        raise ValueError(f"metric must be 'sed' or 'sbtde', got {metric!r}")
    if aggregation not in ("mean", "spp"):
        raise ValueError(f"aggregation must be 'mean' or 'spp', got {aggregation!r}")
    agg = aggregate_mean if aggregation == "mean" else aggregate_spp
    out: dict[str, float] = {}
    for image_id in sorted(human):
        paths = human[image_id]
        if len(paths) < 2:
            warnings.warn(
                f"human baseline needs >= 2 observers, image {image_id!r} has {len(paths)}",
                stacklevel=2,
            )
            continue
        strings = [quantize(p.truncated(length), grid) for p in paths]
        scores = []
        for i, held_out in enumerate(strings):
            others = strings[:i] + strings[i + 1 :]
            if metric == "sed":
                pair = [sed(held_out, o) for o in others]
            else:
                k = min(max_k, held_out.size)
                pair = [sbtde(held_out, o, k) for o in others if o.size >= k]
                if not pair:
                    continue
            scores.append(agg(pair))
        if scores:
            out[image_id] = float(np.mean(scores))
    return out
