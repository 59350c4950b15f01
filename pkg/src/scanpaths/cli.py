"""Command-line experiment harness.

Subcommands cover the full loop: ``train-task`` fits the frozen task model,
``train-attention`` trains the fixation policy against it, ``generate`` emits
scanpath files (trained policy or any baseline), ``evaluate`` scores scanpath
files against human fixations, and ``plot`` renders the three-panel figure
for one stimulus.  Every command writes a JSON manifest with the fully
resolved config next to its outputs; manifests can be fed back through
``--config`` to reproduce a seeded run bit for bit.

Exit codes: 0 success, 2 usage/config error, 3 data error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import sys
import traceback
import zlib
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .attention import (
    generate_scanpath,
    load_attention_model,
    new_attention_model,
    train_attention,
)
from .baselines import (
    center_scanpath,
    human_baseline,
    random_scanpath,
    saliency_itti_lite,
    wta_scanpath,
)
from .config import ConfigError, ExperimentConfig, load_config, write_manifest
from .data import (
    FIXATION_COLUMNS,
    DataError,
    LabeledStimulus,
    Scanpath,
    load_fixations,
    load_image,
    load_images,
    load_scanpaths,
    make_synthetic_dataset,
    normalize_record,
    write_scanpaths,
)
from .metrics import MetricRow
from .metrics import evaluate as evaluate_scanpaths
from .metrics import summarize, write_metric_rows, write_summary
from .plotting import render_scanpath_panels
from .tasks import load_task_model, train_classifier, train_reconstructor

BASELINE_METHODS = ("random", "center", "wta")
TRAINED_METHOD = "attention"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scanpaths",
        description="Train, generate, and evaluate task-driven visual scanpaths.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="YAML/JSON config file (or a manifest from a previous run)")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            metavar="KEY=VALUE",
            help="override a config value, e.g. --set evaluation.length=10",
        )
        p.add_argument("--seed", type=int, help="override the experiment seed")
        p.add_argument("--output-dir", help="override the output directory")

    p = sub.add_parser("train-task", help="train the frozen task model (classifier or autoencoder)")
    common(p)

    p = sub.add_parser("train-attention", help="train the fixation policy against a task checkpoint")
    common(p)
    p.add_argument("--task-checkpoint", required=True, help="checkpoint written by train-task")

    p = sub.add_parser("generate", help="write a scanpath file for every stimulus")
    common(p)
    p.add_argument(
        "--method",
        required=True,
        choices=(*BASELINE_METHODS, TRAINED_METHOD),
        help="scanpath generator to run",
    )
    p.add_argument("--checkpoint", help="attention checkpoint (required for --method attention)")
    p.add_argument("--method-name", help="label written to the scanpath file (default: the method)")

    p = sub.add_parser("evaluate", help="score scanpath files against human fixations")
    common(p)
    p.add_argument("--human", required=True, help="canonical fixation CSV with human records")
    p.add_argument("--scanpaths", required=True, nargs="+", help="one or more generated scanpath files")

    p = sub.add_parser("plot", help="render original / memory-mask / perceived panels for one stimulus")
    common(p)
    p.add_argument("--scanpaths", required=True, help="scanpath file to read the fixations from")
    p.add_argument("--image", required=True, help="stimulus id, or a path to an image file")
    p.add_argument("--method", help="method label to plot when the file holds several")
    return parser


# --------------------------------------------------------------------------
# shared plumbing
# --------------------------------------------------------------------------


def _resolved_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config, args.overrides or [])
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.output_dir is not None:
        cfg = replace(cfg, output_dir=args.output_dir)
    return cfg


def _synthetic_split(cfg: ExperimentConfig) -> tuple[list[LabeledStimulus], list[LabeledStimulus]]:
    """One seeded draw, sliced into disjoint train and test sets."""
    ds = cfg.dataset
    samples = make_synthetic_dataset(
        ds.n_train + ds.n_test,
        kind="quadrant-shapes",
        seed=cfg.dataset_seed(),
        image_size=ds.image_size,
        channels=ds.channels,
    )
    return samples[: ds.n_train], samples[ds.n_train :]


def synthetic_image_id(index: int) -> str:
    return f"synthetic-{index:04d}"


def _load_stimuli(cfg: ExperimentConfig) -> dict[str, np.ndarray]:
    """The stimuli scanpaths are generated/evaluated on, keyed by image id."""
    if cfg.dataset.kind == "images":
        directory = Path(cfg.dataset.images_dir)
        if not directory.is_dir():
            raise ConfigError(f"dataset.images_dir does not resolve: {directory}")
        images = load_images(directory)
        if not images:
            raise DataError(f"no readable images in {directory}")
        return images
    _, test = _synthetic_split(cfg)
    return {synthetic_image_id(i): s.stimulus for i, s in enumerate(test)}


def _sizes(images: dict[str, np.ndarray]) -> dict[str, tuple[int, int]]:
    return {k: v.shape[:2] for k, v in images.items()}


def _per_image_seed(seed: int, image_id: str) -> int:
    # Stable across runs and independent of dict ordering.
    return (seed * 0x9E3779B1 + zlib.crc32(image_id.encode())) & 0xFFFFFFFF


def _write_history_log(path: Path, history: dict) -> Path:
    """Long-format training log: one row per (metric, epoch)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "epoch", "value"])
        curve = history.get("train_loss", [])
        for epoch, value in enumerate(curve):
            writer.writerow(["train_loss", epoch, f"{value:.8f}"])
        for key in ("val_accuracy", "val_mse"):
            if key in history:
                writer.writerow([key, max(len(curve) - 1, 0), f"{history[key]:.8f}"])
    return path


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_train_task(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    tcfg = cfg.task_train_config()
    if cfg.dataset.kind == "synthetic":
        train_set, _ = _synthetic_split(cfg)
    else:
        if cfg.task.kind == "classification":
            raise ConfigError(
                "an images-only dataset has no class labels; use dataset.kind='synthetic' "
                "for classification or task.kind='reconstruction' for images"
            )
        images = _load_stimuli(cfg)
        train_set = [LabeledStimulus(arr, 0) for _, arr in sorted(images.items())]
    if cfg.task.kind == "classification":
        model = train_classifier(train_set, tcfg)
    else:
        model = train_reconstructor(train_set, tcfg)
    out = Path(cfg.output_dir)
    checkpoint = model.save(out / f"task_{cfg.task.kind}.pt")
    log = _write_history_log(out / f"task_{cfg.task.kind}_log.csv", model.history)
    write_manifest(out, "train-task", cfg, {"checkpoint": str(checkpoint), "log": str(log)})
    held_out = model.history.get("val_accuracy", model.history.get("val_mse"))
    shown = "n/a" if held_out is None else f"{held_out:.4f}"
    print(f"wrote {checkpoint} (held-out: {shown})")
    return 0


def cmd_train_attention(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    ckpt_path = Path(args.task_checkpoint)
    if not ckpt_path.is_file():
        raise ConfigError(f"task checkpoint not found: {ckpt_path}")
    task = load_task_model(ckpt_path)
    if task.kind != cfg.task.kind:
        raise ConfigError(
            f"task checkpoint kind {task.kind!r} does not match config task.kind {cfg.task.kind!r}"
        )
    if cfg.dataset.kind == "synthetic":
        train_set, _ = _synthetic_split(cfg)
    else:
        if task.kind == "classification":
            raise ConfigError("classification training needs the labelled synthetic dataset")
        images = _load_stimuli(cfg)
        train_set = [LabeledStimulus(arr, 0) for _, arr in sorted(images.items())]
    channels = train_set[0].stimulus.shape[2]
    attn = new_attention_model(channels, cfg.attention.width, cfg.foveation, seed=cfg.seed)
    attn = train_attention(attn, task, train_set, cfg.attention_train_config())
    out = Path(cfg.output_dir)
    checkpoint = attn.save(out / "attention.pt")
    log = _write_history_log(out / "attention_log.csv", attn.history)
    write_manifest(
        out,
        "train-attention",
        cfg,
        {"checkpoint": str(checkpoint), "task_checkpoint": str(ckpt_path), "log": str(log)},
    )
    print(f"wrote {checkpoint} (final epoch loss: {attn.history['train_loss'][-1]:.4f})")
    return 0


def cmd_generate(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    images = _load_stimuli(cfg)
    sizes = _sizes(images)
    length = cfg.evaluation.length
    label = args.method_name or args.method
    scanpaths: dict[str, Scanpath] = {}
    if args.method == TRAINED_METHOD:
        if not args.checkpoint:
            raise ConfigError("--method attention requires --checkpoint")
        ckpt_path = Path(args.checkpoint)
        if not ckpt_path.is_file():
            raise ConfigError(f"attention checkpoint not found: {ckpt_path}")
        attn = load_attention_model(ckpt_path)
        for image_id in sorted(images):
            scanpaths[image_id] = generate_scanpath(
                attn, images[image_id], length, cfg.foveation, stimulus_id=image_id
            )
    elif args.method == "random":
        for image_id in sorted(images):
            h, w = sizes[image_id]
            seed = _per_image_seed(cfg.seed, image_id)
            scanpaths[image_id] = random_scanpath(h, w, length, seed, stimulus_id=image_id)
    elif args.method == "center":
        for image_id in sorted(images):
            h, w = sizes[image_id]
            seed = _per_image_seed(cfg.seed, image_id)
            scanpaths[image_id] = center_scanpath(
                h, w, length, seed, sigma_center=cfg.baselines.sigma_center, stimulus_id=image_id
            )
    elif args.method == "wta":
        for image_id in sorted(images):
            saliency = saliency_itti_lite(images[image_id])
            scanpaths[image_id] = wta_scanpath(
                saliency, length, ior_radius=cfg.baselines.ior_radius, stimulus_id=image_id
            )
    else:  # pragma: no cover - argparse choices guard this
        raise ConfigError(f"unknown method {args.method!r}")
    out = Path(cfg.output_dir)
    scanpath_file = write_scanpaths(out / f"scanpaths_{label}.csv", scanpaths, label, sizes)
    write_manifest(
        out,
        "generate",
        cfg,
        {
            "method": args.method,
            "method_name": label,
            "checkpoint": args.checkpoint,
            "scanpath_file": str(scanpath_file),
        },
    )
    print(f"wrote {scanpath_file} ({len(scanpaths)} scanpaths of length {length})")
    return 0


def cmd_evaluate(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    human_path = Path(args.human)
    if not human_path.is_file():
        raise ConfigError(f"human fixation file not found: {human_path}")
    for f in args.scanpaths:
        if not Path(f).is_file():
            raise ConfigError(f"scanpath file not found: {f}")
    images = _load_stimuli(cfg)
    sizes = _sizes(images)
    grid = cfg.grid()
    ev = cfg.evaluation

    records, human_report = load_fixations(human_path, sizes)
    human: dict[str, list[Scanpath]] = {}
    for rec in records:
        human.setdefault(rec.image_id, []).append(normalize_record(rec))

    all_rows = []
    coverage: dict[str, dict] = {}
    for f in args.scanpaths:
        per_method, _ = load_scanpaths(Path(f), sizes)
        for method, sp_map in per_method.items():
            rows, report = evaluate_scanpaths(
                sp_map,
                human,
                grid,
                max_k=ev.max_k,
                length=ev.length,
                method=method,
                truncate_human=ev.truncate_human,
            )
            all_rows.extend(rows)
            coverage[method] = {
                "evaluated": len(report.evaluated),
                "missing_human": report.missing_human,
                "missing_generated": report.missing_generated,
                "sbtde_skipped": report.sbtde_skipped,
            }
    if not all_rows:
        raise DataError(
            "no overlapping image ids between the scanpath files and the human fixation file"
        )

    human_rows = []
    for metric in ("sed", "sbtde"):
        for agg in ("mean", "spp"):
            per_image = human_baseline(human, metric, ev.length, grid, max_k=ev.max_k, aggregation=agg)
            human_rows.extend(
                MetricRow(image_id, "human", metric, agg, value) for image_id, value in per_image.items()
            )

    out = Path(cfg.output_dir)
    rows_path = write_metric_rows(out / "evaluation_per_image.csv", all_rows + human_rows)
    summary = summarize(all_rows + human_rows)
    summary_path = write_summary(out / "evaluation_summary.csv", summary)
    write_manifest(
        out,
        "evaluate",
        cfg,
        {
            "human": str(human_path),
            "scanpaths": [str(f) for f in args.scanpaths],
            "per_image": str(rows_path),
            "summary": str(summary_path),
            "coverage": coverage,
            "human_load": human_report.summary(),
        },
    )
    methods = sorted({m for m, _, _ in summary})
    print("metric/aggregation  " + "  ".join(f"{m:>12s}" for m in methods))
    for metric in ("sed", "sbtde"):
        for agg in ("mean", "spp"):
            cells = [
                f"{summary[(m, metric, agg)]:12.4f}" if (m, metric, agg) in summary else " " * 12
                for m in methods
            ]
            print(f"{metric:>6s} {agg:>12s}  " + "  ".join(cells))
    return 0


def _read_single_scanpath(path: Path, image_id: str, size: tuple[int, int], method: str | None) -> tuple[str, Scanpath]:
    """Read one (image, method) scanpath from a file, checking index integrity.

    Used by ``plot``, which must tolerate files holding many other images.
    """
    if not path.is_file():
        raise ConfigError(f"scanpath file not found: {path}")
    groups: dict[str, list[tuple[int, float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != FIXATION_COLUMNS:
            raise DataError(f"{path}: bad header {header}, expected {FIXATION_COLUMNS}")
        for row in reader:
            if len(row) != 5 or row[0].strip() != image_id:
                continue
            try:
                groups.setdefault(row[1].strip(), []).append(
                    (int(row[2]), float(row[3]), float(row[4]))
                )
            except ValueError as exc:
                raise DataError(f"{path}: malformed row {row}: {exc}") from exc
    if not groups:
        raise ConfigError(f"{path}: no scanpath for image {image_id!r}")
    if method is None:
        if len(groups) > 1:
            raise ConfigError(
                f"{path} holds several methods for {image_id!r} ({sorted(groups)}); pass --method"
            )
        method = next(iter(groups))
    elif method not in groups:
        raise ConfigError(f"{path}: no scanpath for image {image_id!r} and method {method!r}")
    rows = sorted(groups[method])
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ConfigError(
            f"{path}: fixation_index for {image_id!r}/{method!r} is not contiguous from 0 "
            f"(got {[r[0] for r in rows]})"
        )
    h, w = size
    fixes = np.array([[x / w, y / h] for _, x, y in rows])
    if fixes.min() < 0.0 or fixes.max() > 1.0:
        raise DataError(f"{path}: fixations for {image_id!r} fall outside the image")
    return method, Scanpath(fixes, stimulus_id=image_id)


def cmd_plot(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    image_arg = Path(args.image)
    if image_arg.is_file():
        stimulus = load_image(image_arg)
        image_id = image_arg.stem
    else:
        images = _load_stimuli(cfg)
        image_id = args.image
        if image_id not in images:
            raise ConfigError(f"unknown stimulus id {image_id!r}")
        stimulus = images[image_id]
    method, scanpath = _read_single_scanpath(
        Path(args.scanpaths), image_id, stimulus.shape[:2], args.method
    )
    out = Path(cfg.output_dir)
    panels = render_scanpath_panels(stimulus, scanpath, cfg.foveation, out, f"{image_id}_{method}")
    write_manifest(
        out,
        "plot",
        cfg,
        {
            "image": args.image,
            "image_id": image_id,
            "method": method,
            "scanpaths": str(args.scanpaths),
            "panels": [str(p) for p in panels],
        },
    )
    for p in panels:
        print(p)
    return 0


HANDLERS = {
    "train-task": cmd_train_task,
    "train-attention": cmd_train_attention,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "plot": cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage message
        return int(exc.code or 0)
    try:
        cfg = _resolved_config(args)
        return HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except Exception:  # noqa: BLE001 - last-resort diagnostic
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
