"""Experiment configuration: schema, file loading, overrides, and manifests.

A config file (YAML or JSON) mirrors ``ExperimentConfig``: top-level ``seed``
and ``output_dir`` plus one section per concern (``dataset``, ``foveation``,
``task``, ``attention``, ``baselines``, ``evaluation``).  Every field has a
default, unknown keys are rejected, and whatever a command actually ran with
— defaults included — is echoed to a JSON manifest next to its outputs.  A
manifest is itself a valid ``--config`` argument, which is how seeded runs
are reproduced bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

import yaml

from .attention import AttentionTrainConfig
from .foveation import FoveationConfig
from .metrics import GridSpec
from .tasks import TaskTrainConfig

__all__ = [
    "ConfigError",
    "DatasetSection",
    "TaskSection",
    "AttentionSection",
    "BaselineSection",
    "EvaluationSection",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
    "config_to_dict",
    "apply_overrides",
    "write_manifest",
]


class ConfigError(Exception):
    """Raised for malformed configuration or unusable paths (CLI exit code 2)."""


@dataclass(frozen=True)
class DatasetSection:
    kind: str = "synthetic"  # "synthetic" | "images"
    n_train: int = 2000
    n_test: int = 500
    image_size: int = 32
    channels: int = 3
    seed: int | None = None  # defaults to the experiment seed
    images_dir: str | None = None  # for kind="images"
    fixations: str | None = None  # canonical fixation CSV (human data)


@dataclass(frozen=True)
class TaskSection:
    kind: str = "classification"  # "classification" | "reconstruction"
    epochs: int = 16
    batch_size: int = 64
    lr: float = 2e-3
    val_fraction: float = 0.1
    noise_std: float = 0.1
    width: int = 16
    input_size: int = 32


@dataclass(frozen=True)
class AttentionSection:
    horizon: int = 5
    unroll_depth: int = 1
    epochs: int = 6
    batch_size: int = 64
    lr: float = 1e-3
    width: int = 16


@dataclass(frozen=True)
class BaselineSection:
    sigma_center: float = 0.15  # std of the center-bias Gaussian
    ior_radius: float = 0.1  # inhibition-of-return disk for winner-take-all


@dataclass(frozen=True)
class EvaluationSection:
    grid_rows: int = 5
    grid_cols: int = 5
    length: int = 10  # generated scanpath length T
    max_k: int = 5  # longest substring for the substring metric
    truncate_human: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    output_dir: str = "runs/experiment"
    dataset: DatasetSection = field(default_factory=DatasetSection)
    foveation: FoveationConfig = field(default_factory=FoveationConfig)
    task: TaskSection = field(default_factory=TaskSection)
    attention: AttentionSection = field(default_factory=AttentionSection)
    baselines: BaselineSection = field(default_factory=BaselineSection)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)

    # -- views onto the library-level config types ------------------------
    def dataset_seed(self) -> int:
        return self.seed if self.dataset.seed is None else self.dataset.seed

    def task_train_config(self) -> TaskTrainConfig:
        t = self.task
        return TaskTrainConfig(
            epochs=t.epochs,
            batch_size=t.batch_size,
            lr=t.lr,
            val_fraction=t.val_fraction,
            noise_std=t.noise_std,
            width=t.width,
            input_size=t.input_size,
            seed=self.seed,
        )

    def attention_train_config(self) -> AttentionTrainConfig:
        a = self.attention
        return AttentionTrainConfig(
            horizon=a.horizon,
            unroll_depth=a.unroll_depth,
            epochs=a.epochs,
            batch_size=a.batch_size,
            lr=a.lr,
            seed=self.seed,
            foveation=self.foveation,
        )

    def grid(self) -> GridSpec:
        return GridSpec(self.evaluation.grid_rows, self.evaluation.grid_cols)


_SECTION_TYPES = {
    "dataset": DatasetSection,
    "foveation": FoveationConfig,
    "task": TaskSection,
    "attention": AttentionSection,
    "baselines": BaselineSection,
    "evaluation": EvaluationSection,
}


def _build_section(cls, payload, where: str):
    if not isinstance(payload, dict):
        raise ConfigError(f"section {where!r} must be a mapping, got {type(payload).__name__}")
    allowed = {f.name for f in fields(cls)}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in section {where!r}: {sorted(unknown)}")
    try:
        return cls(**payload)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid values in section {where!r}: {exc}") from exc


def config_from_dict(payload: dict) -> ExperimentConfig:
    """Build a validated config from a nested dict; unknown keys are errors."""
    if not isinstance(payload, dict):
        raise ConfigError(f"config root must be a mapping, got {type(payload).__name__}")
    allowed = {f.name for f in fields(ExperimentConfig)}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    kwargs: dict = {}
    for key, value in payload.items():
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        else:
            kwargs[key] = value
    try:
        cfg = ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    ev = cfg.evaluation
    if ev.length < 1:
        raise ConfigError(f"evaluation.length must be >= 1, got {ev.length}")
    if not 1 <= ev.max_k <= ev.length:
        raise ConfigError(f"evaluation.max_k must lie in [1, length], got {ev.max_k}")
    try:
        GridSpec(ev.grid_rows, ev.grid_cols)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.dataset.kind not in ("synthetic", "images"):
        raise ConfigError(f"dataset.kind must be 'synthetic' or 'images', got {cfg.dataset.kind!r}")
    if cfg.dataset.kind == "images" and not cfg.dataset.images_dir:
        raise ConfigError("dataset.kind='images' requires dataset.images_dir")
    if cfg.task.kind not in ("classification", "reconstruction"):
        raise ConfigError(
            f"task.kind must be 'classification' or 'reconstruction', got {cfg.task.kind!r}"
        )
    if cfg.baselines.sigma_center <= 0 or cfg.baselines.ior_radius <= 0:
        raise ConfigError("baselines.sigma_center and baselines.ior_radius must be positive")
    # Trip the library-level validators early so bad values fail at config
    # time, not mid-run.
    try:
        cfg.task_train_config()
        cfg.attention_train_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Load a config file (YAML or JSON), apply ``key=value`` overrides, validate.

    A manifest written by a previous run is accepted directly: its embedded
    ``config`` block is unwrapped.  With ``path=None`` the defaults are used.
    """
    if path is None:
        payload: dict = {}
    else:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text()
        try:
            payload = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if payload is None:
            payload = {}
        if isinstance(payload, dict) and "command" in payload and "config" in payload:
            payload = payload["config"]  # manifest rerun
    if overrides:
        payload = apply_overrides(payload, overrides)
    return config_from_dict(payload)


def apply_overrides(payload: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` strings onto a config dict (returns a copy).

    Values are parsed as JSON where possible (numbers, booleans, null) and
    fall back to plain strings.
    """
    out = json.loads(json.dumps(payload))  # deep copy of plain data
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        keys = dotted.strip().split(".")
        if not all(keys):
            raise ConfigError(f"bad override key {dotted!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {dotted!r} descends into a non-mapping")
        node[keys[-1]] = value
    return out


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Fully resolved config as plain data (defaults included)."""
    if not is_dataclass(cfg):
        raise TypeError("expected an ExperimentConfig")
    return asdict(cfg)


def write_manifest(output_dir: str | Path, command: str, cfg: ExperimentConfig, args: dict) -> Path:
    """Record exactly what a command ran with, next to its outputs.

    The manifest holds the command name, the non-config command-line
    arguments, and the fully resolved config; feeding it back via
    ``--config`` reruns the seeded operation identically.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / f"manifest_{command.replace('-', '_')}.json"
    payload = {"command": command, "args": args, "config": config_to_dict(cfg)}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
