"""Scanpath similarity metrics on grid-quantised fixation strings.

Fixation sequences are first mapped to strings of cell indices over a coarse
grid; similarity is then measured two ways:

* string edit distance (SED): minimum number of single-symbol insertions,
  deletions, and substitutions turning one string into the other;
* substring mismatch distance (SBTDE): for every substring length k up to
  ``max_k``, slide a window over the first string and find, for each window,
  the best-matching window anywhere in the second string by normalised
  Hamming distance; average the per-window minima, then average over k.
  The result lies in [0, 1]; order matters (first argument = generated,
  second = reference).

Each generated scanpath is scored against every human scanpath on the same
image and the per-human scores are aggregated per image: ``mean`` is the
average observer; ``spp`` keeps the single best (minimum) score.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .data import Scanpath

__all__ = [
    "GridSpec",
    "SBTDE_DEFINITION",
    "quantize",
    "sed",
    "sbtde",
    "aggregate_mean",
    "aggregate_spp",
    "MetricRow",
    "EvaluationReport",
    "evaluate",
    "summarize",
    "write_metric_rows",
    "write_summary",
]

# Which variant of the substring metric this module implements; recorded in
# evaluation output so scores are never compared across incompatible variants.
SBTDE_DEFINITION = "mean-min-hamming-v1"

AGGREGATIONS = ("mean", "spp")
METRIC_NAMES = ("sed", "sbtde")


@dataclass(frozen=True)
class GridSpec:
    """Quantisation grid; cells are indexed row-major from the top-left."""

    rows: int = 5
    cols: int = 5

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid sides must be positive, got {self.rows}x{self.cols}")
        if self.rows * self.cols < 2:
            raise ValueError("grid must have at least 2 cells")

    @property
    def cells(self) -> int:
        return self.rows * self.cols


def quantize(scanpath: Scanpath | np.ndarray, grid: GridSpec) -> np.ndarray:
    """Map normalised fixations to a string of grid-cell symbols.

    Symbol = ``row * cols + col`` with ``row = floor(y * rows)`` and
    ``col = floor(x * cols)``; coordinates exactly equal to 1.0 fall into the
    last row/column rather than off the grid.
    """
    fixes = scanpath.fixations if isinstance(scanpath, Scanpath) else np.asarray(scanpath, dtype=np.float64)
    if fixes.ndim != 2 or fixes.shape[1] != 2:
        raise ValueError(f"expected (T, 2) fixations, got shape {fixes.shape}")
    if fixes.min() < 0.0 or fixes.max() > 1.0:
        raise ValueError("fixations must lie in [0, 1]^2")
    cols = np.minimum(np.floor(fixes[:, 0] * grid.cols).astype(np.int64), grid.cols - 1)
    rows = np.minimum(np.floor(fixes[:, 1] * grid.rows).astype(np.int64), grid.rows - 1)
    return rows * grid.cols + cols


def sed(a, b) -> int:
    """String edit distance with unit insert/delete/substitute costs.

    Accepts any two sequences of comparable symbols, including unequal and
    zero lengths.  Classic two-row dynamic programme.
    """
    a = list(a)
    b = list(b)
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, sa in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, sb in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,  # delete from a
                cur[j - 1] + 1,  # insert into a
                prev[j - 1] + (sa != sb),  # substitute
            )
        prev = cur
    return int(prev[-1])


def sbtde(generated, reference, max_k: int) -> float:
    """Substring mismatch distance between two symbol strings (see module docstring).

    Asymmetric: every substring of ``generated`` is matched against
    ``reference``.  Requires ``1 <= max_k <= min(len(generated), len(reference))``.
    """
    a = np.asarray(list(generated))
    b = np.asarray(list(reference))
    limit = min(a.size, b.size)
    if not 1 <= max_k <= limit:
        raise ValueError(
            f"max_k must lie in [1, min(len a, len b)] = [1, {limit}], got {max_k}"
        )
    per_k = np.empty(max_k)
    for k in range(1, max_k + 1):
        wa = sliding_window_view(a, k)  # (na, k)
        wb = sliding_window_view(b, k)  # (nb, k)
        mismatch = (wa[:, None, :] != wb[None, :, :]).mean(axis=2)  # (na, nb)
        per_k[k - 1] = mismatch.min(axis=1).mean()
    return float(per_k.mean())


def aggregate_mean(values) -> float:
    """Average score across observers."""
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size == 0:
        raise ValueError("cannot aggregate an empty score list")
    return float(vals.mean())


def aggregate_spp(values) -> float:
    """Best (smallest) score across observers: the most similar single observer."""
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size == 0:
        raise ValueError("cannot aggregate an empty score list")
    return float(vals.min())


_AGGREGATORS = {"mean": aggregate_mean, "spp": aggregate_spp}


@dataclass(frozen=True)
class MetricRow:
    """One per-image evaluation result."""

    image_id: str
    method: str
    metric: str  # "sed" | "sbtde"
    aggregation: str  # "mean" | "spp"
    value: float


@dataclass
class EvaluationReport:
    """Coverage notes produced alongside metric rows."""

    evaluated: list[str] = field(default_factory=list)
    missing_human: list[str] = field(default_factory=list)  # generated but no reference
    missing_generated: list[str] = field(default_factory=list)  # reference but not generated
    sbtde_skipped: list[str] = field(default_factory=list)  # references shorter than max_k
    sbtde_definition: str = SBTDE_DEFINITION


def evaluate(
    generated: dict[str, Scanpath],
    human: dict[str, list[Scanpath]],
    grid: GridSpec,
    max_k: int,
    length: int,
    method: str = "",
    truncate_human: bool = True,
) -> tuple[list[MetricRow], EvaluationReport]:
    """Score generated scanpaths against human references image by image.

    Human scanpaths longer than ``length`` are truncated when
    ``truncate_human`` is set, mirroring the fixed generated length.  Images
    present on only one side are excluded and listed in the report.  SBTDE
    needs strings at least ``max_k`` long; humans too short for it are skipped
    (per image; if none remain the image gets SED rows only).
    """
    if length < 1:
        raise ValueError("length must be positive")
    if max_k < 1:
        raise ValueError("max_k must be positive")
    rows: list[MetricRow] = []
    report = EvaluationReport()
    report.missing_human = sorted(set(generated) - set(human))
    report.missing_generated = sorted(set(human) - set(generated))
    for image_id in sorted(set(generated) & set(human)):
        gen_sp = generated[image_id]
        refs = human[image_id]
        if not refs:
            report.missing_human.append(image_id)
            continue
        gen = quantize(gen_sp.truncated(length), grid)
        ref_strings = [
            quantize(r.truncated(length) if truncate_human else r, grid) for r in refs
        ]
        sed_scores = [sed(gen, r) for r in ref_strings]
        usable_k = min(max_k, gen.size)
        sbtde_scores = [
            sbtde(gen, r, usable_k) for r in ref_strings if r.size >= usable_k
        ]
        if len(sbtde_scores) < len(ref_strings):
            report.sbtde_skipped.append(image_id)
        for agg in AGGREGATIONS:
            rows.append(MetricRow(image_id, method, "sed", agg, _AGGREGATORS[agg](sed_scores)))
            if sbtde_scores:
                rows.append(
                    MetricRow(image_id, method, "sbtde", agg, _AGGREGATORS[agg](sbtde_scores))
                )
        report.evaluated.append(image_id)
    return rows, report


def summarize(rows: list[MetricRow]) -> dict[tuple[str, str, str], float]:
    """Dataset-level averages keyed by (method, metric, aggregation)."""
    buckets: dict[tuple[str, str, str], list[float]] = {}
    for row in rows:
        buckets.setdefault((row.method, row.metric, row.aggregation), []).append(row.value)
    return {key: float(np.mean(vals)) for key, vals in buckets.items()}


def write_metric_rows(path: str | Path, rows: list[MetricRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "method", "metric", "aggregation", "value"])
        for row in rows:
            writer.writerow([row.image_id, row.method, row.metric, row.aggregation, f"{row.value:.6f}"])
    return path


def write_summary(path: str | Path, summary: dict[tuple[str, str, str], float]) -> Path:
    """Summary table: one row per metric/aggregation, one column per method."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    methods = sorted({m for m, _, _ in summary})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "aggregation", *methods])
        for metric in METRIC_NAMES:
            for agg in AGGREGATIONS:
                cells = [
                    f"{summary[(m, metric, agg)]:.6f}" if (m, metric, agg) in summary else ""
                    for m in methods
                ]
                writer.writerow([metric, agg, *cells])
    return path
