"""Trainable attention: perceived image in, next fixation out.

The attention network never sees the sharp stimulus or its own previous
fixations — only the current partially revealed image.  It is trained by
rolling the perceptual state forward, evaluating a frozen task model on each
step's perceived image, and backpropagating the summed per-step loss through
the foveation blend into the fixation coordinates and from there into the
network.  ``unroll_depth`` truncates how many steps of state history the
gradient may traverse; the default of 1 trains greedily per step.

At inference the task model is gone: scanpath generation alternates
``next_fixation`` and ``update_state`` for the requested horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .data import LabeledStimulus, Scanpath, quadrant_of
from .foveation import FoveationConfig, PerceptualState, image_to_tensor, init_state, update_state
from .tasks import TaskModel, stack_dataset, task_loss

__all__ = [
    "AttentionNetwork",
    "AttentionModel",
    "AttentionTrainConfig",
    "new_attention_model",
    "train_attention",
    "next_fixation",
    "generate_scanpath",
    "rollout",
    "rollout_loss",
    "first_fixation_quadrant_rate",
    "load_attention_model",
]


class AttentionNetwork(nn.Module):
    """Convolutional regressor from an image to a fixation in [0, 1]^2.

    Strided SiLU convolutions, an adaptive pool to a fixed coarse grid (so
    any input resolution works while spatial layout is preserved), and a
    small MLP whose two outputs are squashed by a sigmoid — the fixation can
    never leave the unit square.
    """

    POOL_GRID = 8

    def __init__(self, in_channels: int, width: int = 16):
        super().__init__()
        w = width
        g = self.POOL_GRID
        self.features = nn.Sequential(
            nn.Conv2d(in_channels, w, 5, stride=2, padding=2),
            nn.SiLU(),
            nn.Conv2d(w, 2 * w, 3, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(2 * w, 2 * w, 3, stride=1, padding=1),
            nn.SiLU(),
        )
        self.pool = nn.AdaptiveAvgPool2d(g)
        self.head = nn.Sequential(
            nn.Flatten(),
            nn.Linear(2 * w * g * g, 64),
            nn.SiLU(),
            nn.Linear(64, 2),
        )

    def forward(self, perceived: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.head(self.pool(self.features(perceived))))


@dataclass
class AttentionModel:
    """A (possibly trained) attention network plus its foveation context."""

    net: AttentionNetwork
    in_channels: int
    width: int = 16
    foveation: FoveationConfig = field(default_factory=FoveationConfig)
    history: dict = field(default_factory=dict)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fov = self.foveation
        torch.save(
            {
                "format": "scanpaths-attention-v1",
                "in_channels": self.in_channels,
                "width": self.width,
                "foveation": {
                    "sigma_fovea": fov.sigma_fovea,
                    "sigma_blur": fov.sigma_blur,
                    "gamma": fov.gamma,
                },
                "history": self.history,
                "state_dict": self.net.state_dict(),
            },
            path,
        )
        return path


def load_attention_model(path: str | Path) -> AttentionModel:
    payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    if payload.get("format") != "scanpaths-attention-v1":
        raise ValueError(f"{path}: not an attention checkpoint")
    net = AttentionNetwork(int(payload["in_channels"]), int(payload["width"]))
    net.load_state_dict(payload["state_dict"])
    net.eval()
    return AttentionModel(
        net=net,
        in_channels=int(payload["in_channels"]),
        width=int(payload["width"]),
        foveation=FoveationConfig(**payload["foveation"]),
        history=dict(payload.get("history", {})),
    )


def new_attention_model(
    in_channels: int,
    width: int = 16,
    foveation: FoveationConfig | None = None,
    seed: int = 0,
) -> AttentionModel:
    """Freshly initialised attention model with seeded, reproducible weights."""
    torch.manual_seed(seed)
    net = AttentionNetwork(in_channels, width)
    return AttentionModel(
        net=net,
        in_channels=in_channels,
        width=width,
        foveation=foveation if foveation is not None else FoveationConfig(),
    )


@dataclass(frozen=True)
class AttentionTrainConfig:
    """Rollout and optimiser knobs for attention training."""

    horizon: int = 5
    unroll_depth: int = 1  # steps of state history gradients may traverse
    epochs: int = 6
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0
    foveation: FoveationConfig = field(default_factory=FoveationConfig)

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 1 <= self.unroll_depth <= self.horizon:
            raise ValueError(
                f"unroll_depth must lie in [1, horizon], got {self.unroll_depth} vs horizon {self.horizon}"
            )
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")


def rollout(
    attn_net: nn.Module,
    task: TaskModel,
    images: torch.Tensor,
    targets,
    horizon: int,
    foveation: FoveationConfig,
    unroll_depth: int = 1,
) -> tuple[list[torch.Tensor], list[torch.Tensor], PerceptualState]:
    """Roll the perceptual state forward under the attention policy.

    Returns the per-step task losses, the per-step fixation tensors (still
    attached to the graph), and the final state.  The state is detached every
    ``unroll_depth`` steps, so the gradient of the step-t loss reaches at most
    ``unroll_depth`` fixations back.
    """
    state = init_state(images, foveation)
    losses: list[torch.Tensor] = []
    fixations: list[torch.Tensor] = []
    for t in range(horizon):
        if t % unroll_depth == 0:
            state = state.detach()
        xi = attn_net(state.perceived)
        state = update_state(state, xi)
        losses.append(task_loss(task, state.perceived, targets))
        fixations.append(xi)
    return losses, fixations, state


def train_attention(
    attn: AttentionModel,
    task: TaskModel,
    train_set: list[LabeledStimulus],
    config: AttentionTrainConfig,
) -> AttentionModel:
    """Train the attention network against a frozen task model.

    Classification tasks are supervised by the dataset labels, reconstruction
    tasks by the clean stimuli themselves.  Only attention parameters are
    optimised; the task model is switched to eval mode and its parameters
    frozen.  Deterministic for a fixed seed (given a seeded initial model).
    """
    images, labels = stack_dataset(train_set)
    if images.shape[1] != task.in_channels:
        raise ValueError(
            f"dataset has {images.shape[1]} channels but task model expects {task.in_channels}"
        )
    if images.shape[1] != attn.in_channels:
        raise ValueError(
            f"dataset has {images.shape[1]} channels but attention model expects {attn.in_channels}"
        )
    if task.kind == "classification":
        if task.class_count is None or labels.max().item() >= task.class_count:
            raise ValueError("dataset labels exceed the classifier's class count")
    elif task.kind != "reconstruction":
        raise ValueError(f"unknown task kind {task.kind!r}")
    task.net.eval()
    for p in task.net.parameters():
        p.requires_grad_(False)
    attn.net.train()
    gen = torch.Generator().manual_seed(config.seed)
    opt = torch.optim.Adam(attn.net.parameters(), lr=config.lr)
    n = images.shape[0]
    curve: list[float] = []
    for _ in range(config.epochs):
        perm = torch.randperm(n, generator=gen)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            batch = images[idx]
            targets = labels[idx] if task.kind == "classification" else batch
            losses, _, _ = rollout(
                attn.net, task, batch, targets, config.horizon, config.foveation, config.unroll_depth
            )
            loss = torch.stack(losses).sum() / config.horizon
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * idx.numel()
        curve.append(total / n)
    attn.net.eval()
    attn.foveation = config.foveation
    attn.history = {
        "train_loss": curve,
        "horizon": config.horizon,
        "unroll_depth": config.unroll_depth,
        "epochs": config.epochs,
        "lr": config.lr,
        "seed": config.seed,
    }
    return attn


def next_fixation(attn: AttentionModel, perceived: torch.Tensor) -> torch.Tensor:
    """Deterministic next fixation for a perceived image; (2,) or (B, 2) in [0, 1]^2."""
    if perceived.ndim not in (3, 4):
        raise ValueError(f"perceived must be (C, H, W) or (B, C, H, W), got {tuple(perceived.shape)}")
    if perceived.shape[-3] != attn.in_channels:
        raise ValueError(
            f"perceived has {perceived.shape[-3]} channels, model expects {attn.in_channels}"
        )
    attn.net.eval()
    single = perceived.ndim == 3
    x = perceived.unsqueeze(0) if single else perceived
    with torch.no_grad():
        out = attn.net(x)
    return out.squeeze(0) if single else out


def generate_scanpath(
    attn: AttentionModel,
    s,
    length: int,
    config: FoveationConfig | None = None,
    stimulus_id: str = "",
) -> Scanpath:
    """Emit a scanpath by alternating next_fixation and update_state.

    ``s`` may be a (C, H, W) tensor or an (H, W, C) array in [0, 1].  The task
    model plays no part here; a frozen attention model makes this a pure
    function of (stimulus, length, foveation config).
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    cfg = config if config is not None else attn.foveation
    image = s if isinstance(s, torch.Tensor) else image_to_tensor(s)
    fixations = np.empty((length, 2))
    with torch.no_grad():
        state = init_state(image, cfg)
        for t in range(length):
            xi = next_fixation(attn, state.perceived)
            state = update_state(state, xi)
            fixations[t] = xi.numpy()
    return Scanpath(np.clip(fixations, 0.0, 1.0), stimulus_id=stimulus_id)


def rollout_loss(
    task: TaskModel,
    samples: list[LabeledStimulus],
    policy,
    horizon: int,
    foveation: FoveationConfig,
    batch_size: int = 128,
    seed: int = 0,
) -> float:
    """Mean task loss on the final perceived image after ``horizon`` fixations.

    ``policy`` is an AttentionModel, or the string ``"random"`` for uniformly
    random fixations (the control used to judge whether training helped), or
    any callable mapping a perceived batch to a fixation batch.
    """
    images, labels = stack_dataset(samples)
    gen = torch.Generator().manual_seed(seed)
    if isinstance(policy, AttentionModel):
        policy.net.eval()
        pick = lambda perceived: policy.net(perceived)  # noqa: E731
    elif policy == "random":
        pick = lambda perceived: torch.rand(perceived.shape[0], 2, generator=gen)  # noqa: E731
    elif callable(policy):
        pick = policy
    else:
        raise ValueError(f"policy must be an AttentionModel, 'random', or callable, got {policy!r}")
    total, count = 0.0, 0
    with torch.no_grad():
        for start in range(0, images.shape[0], batch_size):
            batch = images[start : start + batch_size]
            targets = labels[start : start + batch_size] if task.kind == "classification" else batch
            state = init_state(batch, foveation)
            for _ in range(horizon):
                state = update_state(state, pick(state.perceived))
            total += task_loss(task, state.perceived, targets).item() * batch.shape[0]
            count += batch.shape[0]
    return total / count


def first_fixation_quadrant_rate(
    attn: AttentionModel,
    samples: list[LabeledStimulus],
    foveation: FoveationConfig | None = None,
    batch_size: int = 128,
) -> float:
    """Fraction of first fixations landing in the ground-truth object quadrant.

    Requires samples with ``meta["quadrant"]`` (the synthetic dataset provides
    it).  Chance level is 0.25.
    """
    cfg = foveation if foveation is not None else attn.foveation
    images, _ = stack_dataset(samples)
    hits = 0
    with torch.no_grad():
        for start in range(0, images.shape[0], batch_size):
            batch = images[start : start + batch_size]
            state = init_state(batch, cfg)
            xi = next_fixation(attn, state.perceived)
            for row, sample in zip(xi.numpy(), samples[start : start + batch_size]):
                hits += quadrant_of(float(row[0]), float(row[1])) == sample.meta["quadrant"]
    return hits / len(samples)
