"""Differentiable foveated vision with an exponentially decaying perceptual memory.

A foveated view of a stimulus is a pixelwise blend between the sharp image and
a strongly blurred copy, weighted by a Gaussian "fovea" centred on the current
fixation.  Repeated fixations accumulate into a memory mask: each new fixation
deposits a fresh Gaussian blob while earlier deposits decay geometrically with
a forgetting coefficient, and the accumulated map is clipped to [0, 1] before
blending.  Everything is implemented with torch ops only, so gradients flow
from any downstream loss back to the fixation coordinates.

Images are channel-first torch tensors, either ``(C, H, W)`` or batched
``(B, C, H, W)``, with values in [0, 1].  Fixations are ``(x, y)`` pairs in
normalised coordinates: ``(0, 0)`` is the top-left corner, ``(1, 1)`` the
bottom-right, and pixel ``(i, j)`` has centre ``((j + 0.5) / W, (i + 0.5) / H)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import torch
import torch.nn.functional as F

__all__ = [
    "FoveationConfig",
    "PerceptualState",
    "image_to_tensor",
    "tensor_to_image",
    "gaussian_blob",
    "blur_stimulus",
    "foveate",
    "init_state",
    "update_state",
]

MIN_IMAGE_SIDE = 8


@dataclass(frozen=True)
class FoveationConfig:
    """Parameters of the foveation operator.

    Both widths are fractions of image extent, so behaviour is resolution
    independent: ``sigma_fovea`` is the std of the foveal blob in normalised
    coordinates, ``sigma_blur`` is the std of the peripheral blur as a
    fraction of the longer image side.  ``gamma`` in [0, 1] controls how
    quickly old fixations fade from memory (0 = no memory).
    """

    sigma_fovea: float = 0.1
    sigma_blur: float = 0.05
    gamma: float = 0.3

    def __post_init__(self) -> None:
        if not self.sigma_fovea > 0:
            raise ValueError(f"sigma_fovea must be positive, got {self.sigma_fovea}")
        if not self.sigma_blur > 0:
            raise ValueError(f"sigma_blur must be positive, got {self.sigma_blur}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


def image_to_tensor(image: np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Convert an ``(H, W)`` or ``(H, W, C)`` numpy image in [0, 1] to a ``(C, H, W)`` tensor."""
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"expected (H, W) or (H, W, C) array, got shape {arr.shape}")
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1))).to(dtype)


def tensor_to_image(tensor: torch.Tensor) -> np.ndarray:
    """Convert a ``(C, H, W)`` tensor back to an ``(H, W, C)`` numpy array."""
    if tensor.ndim != 3:
        raise ValueError(f"expected (C, H, W) tensor, got shape {tuple(tensor.shape)}")
    return tensor.detach().cpu().numpy().transpose(1, 2, 0)


def _check_image(s: torch.Tensor, name: str = "stimulus") -> None:
    if not isinstance(s, torch.Tensor):
        raise TypeError(
            f"{name} must be a torch tensor (use image_to_tensor for numpy images), "
            f"got {type(s).__name__}"
        )
    if s.ndim not in (3, 4):
        raise ValueError(f"{name} must be (C, H, W) or (B, C, H, W), got shape {tuple(s.shape)}")
    if not s.is_floating_point():
        raise ValueError(f"{name} must be floating point, got dtype {s.dtype}")


def _validate_stimulus(s: torch.Tensor) -> None:
    _check_image(s)
    h, w = s.shape[-2:]
    if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
        raise ValueError(f"stimulus must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {h}x{w}")
    if not torch.isfinite(s).all():
        raise ValueError("stimulus contains non-finite values")
    eps = 1e-6
    lo, hi = s.min().item(), s.max().item()
    if lo < -eps or hi > 1.0 + eps:
        raise ValueError(f"stimulus values must lie in [0, 1], got range [{lo:.4g}, {hi:.4g}]")


def _as_fixation(xi, dtype: torch.dtype, device: torch.device) -> torch.Tensor:
    """Coerce a fixation to a tensor of shape (2,) or (B, 2) without breaking autograd."""
    if isinstance(xi, torch.Tensor):
        t = xi
    else:
        t = torch.as_tensor(np.asarray(xi, dtype=np.float64), dtype=dtype, device=device)
    if t.ndim not in (1, 2) or t.shape[-1] != 2:
        raise ValueError(f"fixation must have shape (2,) or (B, 2), got {tuple(t.shape)}")
    return t


def gaussian_blob(h: int, w: int, xi, sigma_fovea: float) -> torch.Tensor:
    """Unnormalised isotropic Gaussian evaluated at pixel centres.

    The blob peaks at 1 where a pixel centre coincides with the fixation and
    decays with squared normalised distance; it is never renormalised, so the
    clipped memory sum below stays interpretable as a blend weight.

    Returns ``(H, W)`` for a single fixation ``(2,)`` and ``(B, 1, H, W)``
    for a batch of fixations ``(B, 2)``.  Differentiable w.r.t. ``xi``.
    """
    if h < 1 or w < 1:
        raise ValueError(f"image size must be positive, got {h}x{w}")
    if not sigma_fovea > 0:
        raise ValueError(f"sigma_fovea must be positive, got {sigma_fovea}")
    xi_t = _as_fixation(xi, torch.get_default_dtype(), torch.device("cpu"))
    dtype = xi_t.dtype if xi_t.is_floating_point() else torch.get_default_dtype()
    xs = (torch.arange(w, dtype=dtype, device=xi_t.device) + 0.5) / w
    ys = (torch.arange(h, dtype=dtype, device=xi_t.device) + 0.5) / h
    inv = 1.0 / (2.0 * sigma_fovea * sigma_fovea)
    if xi_t.ndim == 1:
        dx2 = (xs - xi_t[0]) ** 2  # (W,)
        dy2 = (ys - xi_t[1]) ** 2  # (H,)
        return torch.exp(-(dy2[:, None] + dx2[None, :]) * inv)
    dx2 = (xs[None, :] - xi_t[:, 0:1]) ** 2  # (B, W)
    dy2 = (ys[None, :] - xi_t[:, 1:2]) ** 2  # (B, H)
    return torch.exp(-(dy2[:, :, None] + dx2[:, None, :]) * inv).unsqueeze(1)


def _gaussian_kernel_1d(sigma_px: float, radius: int, dtype: torch.dtype) -> torch.Tensor:
    x = torch.arange(-radius, radius + 1, dtype=dtype)
    k = torch.exp(-0.5 * (x / sigma_px) ** 2)
    return k / k.sum()


def blur_stimulus(s: torch.Tensor, sigma_blur: float) -> torch.Tensor:
    """Strong Gaussian low-pass of the stimulus; the "peripheral" image.

    ``sigma_blur`` is a fraction of the longer image side.  Separable
    convolution, kernel truncated at three sigma, reflect padding so border
    pixels are not darkened.  Each channel is blurred independently.
    """
    _check_image(s)
    if not sigma_blur > 0:
        raise ValueError(f"sigma_blur must be positive, got {sigma_blur}")
    single = s.ndim == 3
    x = s.unsqueeze(0) if single else s
    b, c, h, w = x.shape
    sigma_px = sigma_blur * max(h, w)
    # Reflect padding requires pad < dim, which caps the usable radius.
    ry = min(max(1, math.ceil(3.0 * sigma_px)), h - 1)
    rx = min(max(1, math.ceil(3.0 * sigma_px)), w - 1)
    ky = _gaussian_kernel_1d(sigma_px, ry, x.dtype).reshape(1, 1, -1, 1).repeat(c, 1, 1, 1)
    kx = _gaussian_kernel_1d(sigma_px, rx, x.dtype).reshape(1, 1, 1, -1).repeat(c, 1, 1, 1)
    out = F.pad(x, (0, 0, ry, ry), mode="reflect")
    out = F.conv2d(out, ky, groups=c)
    out = F.pad(out, (rx, rx, 0, 0), mode="reflect")
    out = F.conv2d(out, kx, groups=c)
    out = out.clamp(0.0, 1.0)
    return out.squeeze(0) if single else out


def _blend(sharp: torch.Tensor, coarse: torch.Tensor, weight: torch.Tensor) -> torch.Tensor:
    # Shared by foveate() and update_state() so that the gamma = 0 memory
    # reduces to plain foveation bit-for-bit.
    return weight * sharp + (1.0 - weight) * coarse


def foveate(s: torch.Tensor, coarse: torch.Tensor, xi, config: FoveationConfig) -> torch.Tensor:
    """Single-fixation foveated view: sharp under the blob, coarse elsewhere."""
    _check_image(s)
    _check_image(coarse, "coarse")
    if s.shape != coarse.shape:
        raise ValueError(f"shape mismatch: stimulus {tuple(s.shape)} vs coarse {tuple(coarse.shape)}")
    h, w = s.shape[-2:]
    blob = gaussian_blob(h, w, _as_fixation(xi, s.dtype, s.device), config.sigma_fovea)
    if s.ndim == 4 and blob.ndim != 4:
        raise ValueError("batched stimulus requires a (B, 2) fixation batch")
    if s.ndim == 3 and blob.ndim == 4:
        raise ValueError("single stimulus requires a single (2,) fixation")
    return _blend(s, coarse, blob)


@dataclass(frozen=True)
class PerceptualState:
    """Everything the foveation process carries from one fixation to the next.

    ``accumulator`` is the decayed, unclipped sum of past blobs and ``mask``
    its clipped version actually used for blending.  ``perceived`` is the
    current blended view (equal to ``coarse`` before the first fixation).
    """

    stimulus: torch.Tensor
    coarse: torch.Tensor
    accumulator: torch.Tensor
    mask: torch.Tensor
    perceived: torch.Tensor
    step: int
    config: FoveationConfig

    def detach(self) -> "PerceptualState":
        """Cut the autograd history (used for truncated unrolls in training)."""
        return replace(
            self,
            stimulus=self.stimulus.detach(),
            coarse=self.coarse.detach(),
            accumulator=self.accumulator.detach(),
            mask=self.mask.detach(),
            perceived=self.perceived.detach(),
        )


def init_state(s: torch.Tensor, config: FoveationConfig) -> PerceptualState:
    """Start a perceptual episode: nothing fixated yet, everything blurred."""
    _validate_stimulus(s)
    coarse = blur_stimulus(s, config.sigma_blur)
    h, w = s.shape[-2:]
    acc_shape = (s.shape[0], 1, h, w) if s.ndim == 4 else (h, w)
    acc = torch.zeros(acc_shape, dtype=s.dtype, device=s.device)
    return PerceptualState(
        stimulus=s,
        coarse=coarse,
        accumulator=acc,
        mask=acc,
        perceived=coarse,
        step=0,
        config=config,
    )


def update_state(state: PerceptualState, xi) -> PerceptualState:
    """Advance the memory by one fixation and re-blend the perceived image.

    The accumulator recursion ``a' = gamma * a + blob`` reproduces the decayed
    series over all past fixations; blobs and gamma are non-negative, so
    clipping the running sum to [0, 1] equals clipping the full series.
    """
    h, w = state.stimulus.shape[-2:]
    xi_t = _as_fixation(xi, state.stimulus.dtype, state.stimulus.device)
    blob = gaussian_blob(h, w, xi_t, state.config.sigma_fovea)
    if state.stimulus.ndim == 4 and blob.ndim != 4:
        raise ValueError("batched state requires a (B, 2) fixation batch")
    if state.stimulus.ndim == 3 and blob.ndim == 4:
        raise ValueError("single-image state requires a single (2,) fixation")
    acc = state.config.gamma * state.accumulator + blob
    mask = acc.clamp(0.0, 1.0)
    perceived = _blend(state.stimulus, state.coarse, mask)
    return replace(state, accumulator=acc, mask=mask, perceived=perceived, step=state.step + 1)
