"""Task models whose loss supervises attention: a classifier and a denoising autoencoder.

The networks deliberately use only smooth operations (SiLU activations,
strided convolutions, average pooling) so that gradients of the task loss
with respect to *pixel values* — and hence, through foveation, with respect
to fixation coordinates — are well behaved and pass finite-difference checks.

A model is trained once on clean stimuli, then frozen; downstream training
only ever evaluates its loss on partially revealed images.  Stimuli whose
resolution differs from the model's native input are resized bilinearly on
the way in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .data import LabeledStimulus
from .foveation import image_to_tensor

__all__ = [
    "TaskTrainConfig",
    "TaskModel",
    "ConvClassifier",
    "ConvAutoencoder",
    "stack_dataset",
    "train_classifier",
    "train_reconstructor",
    "task_loss",
    "load_task_model",
]

TASK_KINDS = ("classification", "reconstruction")


@dataclass(frozen=True)
class TaskTrainConfig:
    epochs: int = 16
    batch_size: int = 64
    lr: float = 2e-3
    val_fraction: float = 0.1
    noise_std: float = 0.1  # input corruption for the denoising objective
    width: int = 16  # base channel count
    input_size: int = 32  # native square resolution of the network
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.width < 1 or self.input_size < 8:
            raise ValueError("width must be >= 1 and input_size >= 8")


class ConvClassifier(nn.Module):
    """Strided conv stack -> global average pool -> linear head."""

    def __init__(self, in_channels: int, class_count: int, width: int = 16):
        super().__init__()
        w = width
        self.features = nn.Sequential(
            nn.Conv2d(in_channels, w, 3, stride=1, padding=1),
            nn.SiLU(),
            nn.Conv2d(w, 2 * w, 3, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(2 * w, 4 * w, 3, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(4 * w, 4 * w, 3, stride=2, padding=1),
            nn.SiLU(),
        )
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Sequential(nn.Flatten(), nn.Linear(4 * w, 64), nn.SiLU(), nn.Linear(64, class_count))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.pool(self.features(x)))


class ConvAutoencoder(nn.Module):
    """Two-level strided encoder with a mirrored transposed-conv decoder."""

    def __init__(self, in_channels: int, width: int = 16):
        super().__init__()
        w = width
        self.encoder = nn.Sequential(
            nn.Conv2d(in_channels, w, 3, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(w, 2 * w, 3, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(2 * w, 2 * w, 3, stride=1, padding=1),
            nn.SiLU(),
        )
        self.decoder = nn.Sequential(
            nn.ConvTranspose2d(2 * w, w, 4, stride=2, padding=1),
            nn.SiLU(),
            nn.ConvTranspose2d(w, w, 4, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(w, in_channels, 3, padding=1),
            nn.Sigmoid(),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decoder(self.encoder(x))


@dataclass
class TaskModel:
    """A trained task network plus the bookkeeping needed to reuse it."""

    kind: str  # "classification" | "reconstruction"
    net: nn.Module
    input_size: int
    in_channels: int
    class_count: int | None = None
    width: int = 16
    history: dict = field(default_factory=dict)

    def bridge(self, image: torch.Tensor) -> torch.Tensor:
        """Match an image batch to the network's native resolution (bilinear)."""
        if image.shape[-2:] == (self.input_size, self.input_size):
            return image
        return F.interpolate(
            image, size=(self.input_size, self.input_size), mode="bilinear", align_corners=False
        )

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        """Run the network; accepts (C, H, W) or (B, C, H, W), keeps autograd intact."""
        single = image.ndim == 3
        x = image.unsqueeze(0) if single else image
        out = self.net(self.bridge(x))
        return out.squeeze(0) if single else out

    def predict(self, image: torch.Tensor) -> torch.Tensor:
        with torch.no_grad():
            out = self.forward(image)
        if self.kind == "classification":
            return out.argmax(dim=-1)
        return out

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "format": "scanpaths-task-v1",
                "kind": self.kind,
                "input_size": self.input_size,
                "in_channels": self.in_channels,
                "class_count": self.class_count,
                "width": self.width,
                "history": self.history,
                "state_dict": self.net.state_dict(),
            },
            path,
        )
        return path


def load_task_model(path: str | Path) -> TaskModel:
    """Rebuild a task model from its checkpoint; the forward map is bit-identical."""
    payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    if payload.get("format") != "scanpaths-task-v1":
        raise ValueError(f"{path}: not a task model checkpoint")
    kind = payload["kind"]
    width = int(payload.get("width", 16))
    if kind == "classification":
        net: nn.Module = ConvClassifier(payload["in_channels"], payload["class_count"], width)
    elif kind == "reconstruction":
        net = ConvAutoencoder(payload["in_channels"], width)
    else:
        raise ValueError(f"{path}: unknown task kind {kind!r}")
    net.load_state_dict(payload["state_dict"])
    net.eval()
    return TaskModel(
        kind=kind,
        net=net,
        input_size=int(payload["input_size"]),
        in_channels=int(payload["in_channels"]),
        class_count=payload["class_count"],
        width=width,
        history=dict(payload.get("history", {})),
    )


def stack_dataset(
    samples: list[LabeledStimulus], dtype: torch.dtype = torch.float32
) -> tuple[torch.Tensor, torch.Tensor]:
    """Stack (H, W, C) samples into (B, C, H, W) images and a label vector."""
    if not samples:
        raise ValueError("dataset is empty")
    shapes = {s.stimulus.shape for s in samples}
    if len(shapes) != 1:
        raise ValueError(f"stimuli must share one shape, got {sorted(shapes)}")
    images = torch.stack([image_to_tensor(s.stimulus, dtype) for s in samples])
    labels = torch.tensor([int(s.target) for s in samples], dtype=torch.long)
    return images, labels


def _split(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    n_val = int(round(n * val_fraction))
    if val_fraction > 0 and n >= 2:
        n_val = max(n_val, 1)
    n_val = min(n_val, n - 1)
    return order[: n - n_val], order[n - n_val :]


def _train_loop(
    net: nn.Module,
    images: torch.Tensor,
    step_loss,
    config: TaskTrainConfig,
) -> list[float]:
    """Generic seeded epoch loop; returns per-epoch mean training loss."""
    gen = torch.Generator().manual_seed(config.seed)
    opt = torch.optim.Adam(net.parameters(), lr=config.lr)
    n = images.shape[0]
    curve = []
    for _ in range(config.epochs):
        perm = torch.randperm(n, generator=gen)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            loss = step_loss(idx, gen)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * idx.numel()
        curve.append(total / n)
    return curve


def train_classifier(train_set: list[LabeledStimulus], config: TaskTrainConfig) -> TaskModel:
    """Train a shape classifier on clean stimuli.

    Labels must be non-negative integers with at least two classes present.
    The returned model records the training curve and held-out accuracy in
    ``history``; training is deterministic for a fixed seed.
    """
    images, labels = stack_dataset(train_set)
    if labels.min().item() < 0:
        raise ValueError("class labels must be non-negative")
    class_count = int(labels.max().item()) + 1
    if len(torch.unique(labels)) < 2:
        raise ValueError("training set must contain at least two classes")
    if images.shape[-2:] != (config.input_size, config.input_size):
        images = F.interpolate(
            images, size=(config.input_size, config.input_size), mode="bilinear", align_corners=False
        )
    train_idx, val_idx = _split(images.shape[0], config.val_fraction, config.seed)
    tr_images, tr_labels = images[train_idx], labels[train_idx]
    torch.manual_seed(config.seed)
    net = ConvClassifier(images.shape[1], class_count, config.width)

    def step(idx: torch.Tensor, _gen: torch.Generator) -> torch.Tensor:
        return F.cross_entropy(net(tr_images[idx]), tr_labels[idx])

    curve = _train_loop(net, tr_images, step, config)
    net.eval()
    history: dict = {"train_loss": curve}
    if len(val_idx):
        with torch.no_grad():
            pred = net(images[val_idx]).argmax(dim=1)
        history["val_accuracy"] = float((pred == labels[val_idx]).float().mean().item())
    return TaskModel(
        kind="classification",
        net=net,
        input_size=config.input_size,
        in_channels=int(images.shape[1]),
        class_count=class_count,
        width=config.width,
        history=history,
    )


def train_reconstructor(train_set: list[LabeledStimulus], config: TaskTrainConfig) -> TaskModel:
    """Train a denoising autoencoder: reconstruct the clean stimulus from a noisy copy."""
    images, _ = stack_dataset(train_set)
    if images.shape[-2:] != (config.input_size, config.input_size):
        images = F.interpolate(
            images, size=(config.input_size, config.input_size), mode="bilinear", align_corners=False
        )
    train_idx, val_idx = _split(images.shape[0], config.val_fraction, config.seed)
    tr_images = images[train_idx]
    torch.manual_seed(config.seed)
    net = ConvAutoencoder(images.shape[1], config.width)

    def step(idx: torch.Tensor, gen: torch.Generator) -> torch.Tensor:
        clean = tr_images[idx]
        noisy = clean
        if config.noise_std > 0:
            noise = torch.randn(clean.shape, generator=gen, dtype=clean.dtype)
            noisy = (clean + config.noise_std * noise).clamp(0.0, 1.0)
        return F.mse_loss(net(noisy), clean)

    curve = _train_loop(net, tr_images, step, config)
    net.eval()
    history: dict = {"train_loss": curve}
    if len(val_idx):
        with torch.no_grad():
            history["val_mse"] = float(F.mse_loss(net(images[val_idx]), images[val_idx]).item())
    return TaskModel(
        kind="reconstruction",
        net=net,
        input_size=config.input_size,
        in_channels=int(images.shape[1]),
        class_count=None,
        width=config.width,
        history=history,
    )


def task_loss(model: TaskModel, image: torch.Tensor, target) -> torch.Tensor:
    """Differentiable scalar task loss on a (possibly partially revealed) image.

    Classification: cross entropy against integer labels.  Reconstruction:
    mean squared error against the *clean* stimulus (both sides bridged to the
    model resolution).  Gradients flow to ``image``; model parameters are not
    touched.
    """
    single = image.ndim == 3
    x = image.unsqueeze(0) if single else image
    out = model.net(model.bridge(x))
    if model.kind == "classification":
        if isinstance(target, torch.Tensor):
            tgt = target.reshape(-1).long()
        else:
            tgt = torch.tensor([int(target)] if np.isscalar(target) else target, dtype=torch.long)
        if tgt.numel() == 1 and x.shape[0] > 1:
            tgt = tgt.expand(x.shape[0])
        if tgt.min().item() < 0 or tgt.max().item() >= model.class_count:
            raise ValueError(
                f"label out of range for {model.class_count}-way classifier: {tgt.tolist()[:5]}"
            )
        return F.cross_entropy(out, tgt)
    if model.kind == "reconstruction":
        if not isinstance(target, torch.Tensor):
            raise TypeError("reconstruction target must be the clean image tensor")
        t = target.unsqueeze(0) if target.ndim == 3 else target
        return F.mse_loss(out, model.bridge(t))
    raise ValueError(f"unknown task kind {model.kind!r}")
