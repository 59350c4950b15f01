"""Canonical data model: stimuli, scanpaths, eye-tracking records, and loaders.

All on-disk fixation data uses one CSV schema::

    image_id,subject_id,fixation_index,x_px,y_px

with pixel coordinates (x right, y down, origin at the top-left corner).
Generated scanpaths are written in the same schema with the generator's name
in the ``subject_id`` column, so a single loader and a single evaluator serve
both human recordings and model output.  In-memory fixations are normalised
to [0, 1]^2 so nothing downstream depends on image resolution.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

__all__ = [
    "DataError",
    "Scanpath",
    "LabeledStimulus",
    "EyeTrackingRecord",
    "LoadReport",
    "FIXATION_COLUMNS",
    "load_fixations",
    "write_fixations",
    "write_scanpaths",
    "load_scanpaths",
    "normalize_record",
    "denormalize_scanpath",
    "load_image",
    "load_images",
    "save_image",
    "make_synthetic_dataset",
    "reference_scanpaths",
    "SHAPE_CLASSES",
    "quadrant_of",
]

FIXATION_COLUMNS = ["image_id", "subject_id", "fixation_index", "x_px", "y_px"]

# Fraction of data rows that may be malformed before a file is rejected.
MALFORMED_TOLERANCE = 0.10


class DataError(Exception):
    """Raised when an input file violates the canonical format."""


@dataclass
class Scanpath:
    """An ordered sequence of fixations in normalised [0, 1]^2 coordinates."""

    fixations: np.ndarray  # (T, 2) float64, columns (x, y)
    stimulus_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        arr = np.asarray(self.fixations, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise ValueError(f"fixations must have shape (T >= 1, 2), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("fixations contain non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError(
                f"fixations must lie in [0, 1]^2, got range "
                f"[{arr.min():.4g}, {arr.max():.4g}]"
            )
        self.fixations = arr

    def __len__(self) -> int:
        return self.fixations.shape[0]

    def truncated(self, length: int) -> "Scanpath":
        """First ``length`` fixations (or the whole path if shorter)."""
        return Scanpath(self.fixations[:length], self.stimulus_id, dict(self.meta))


@dataclass
class LabeledStimulus:
    """An image with a task target and optional generation metadata."""

    stimulus: np.ndarray  # (H, W, C) float in [0, 1]
    target: int
    meta: dict = field(default_factory=dict)


@dataclass
class EyeTrackingRecord:
    """One subject's raw fixation sequence on one image, in pixel coordinates."""

    image_id: str
    subject_id: str
    fixations: np.ndarray  # (n, 2) float, columns (x_px, y_px)
    image_size: tuple[int, int]  # (H, W)

    def __post_init__(self) -> None:
        arr = np.asarray(self.fixations, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise ValueError(f"fixations must have shape (n >= 1, 2), got {arr.shape}")
        self.fixations = arr


@dataclass
class LoadReport:
    """What happened while parsing a fixation file."""

    rows_total: int = 0
    rows_kept: int = 0
    dropped_out_of_bounds: int = 0
    malformed: list[tuple[int, str]] = field(default_factory=list)  # (line number, reason)
    empty_records: list[tuple[str, str]] = field(default_factory=list)

    def summary(self) -> str:
        return (
            f"{self.rows_kept}/{self.rows_total} rows kept, "
            f"{self.dropped_out_of_bounds} out-of-bounds dropped, "
            f"{len(self.malformed)} malformed"
        )


def load_fixations(
    path: str | Path,
    image_sizes: dict[str, tuple[int, int]],
) -> tuple[list[EyeTrackingRecord], LoadReport]:
    """Parse a canonical fixation CSV into per-(image, subject) records.

    ``image_sizes`` maps image ids to ``(H, W)``; it is required because the
    schema stores pixel coordinates without resolution.  Out-of-bounds
    fixations (outside ``[0, W) x [0, H)``) are dropped and counted.  Rows that
    fail to parse or name an unknown image are collected as malformed; if they
    exceed 10% of the data rows the whole file is rejected.  Rows with the
    same (image_id, subject_id) are concatenated in file order.
    """
    path = Path(path)
    report = LoadReport()
    groups: dict[tuple[str, str], list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected header {FIXATION_COLUMNS}")
        if [h.strip() for h in header] != FIXATION_COLUMNS:
            raise DataError(f"{path}: bad header {header}, expected {FIXATION_COLUMNS}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            report.rows_total += 1
            if len(row) != len(FIXATION_COLUMNS):
                report.malformed.append((line_no, f"expected {len(FIXATION_COLUMNS)} fields, got {len(row)}"))
                continue
            image_id, subject_id, idx_s, x_s, y_s = (cell.strip() for cell in row)
            try:
                int(idx_s)
                x = float(x_s)
                y = float(y_s)
            except ValueError:
                report.malformed.append((line_no, "non-numeric fixation fields"))
                continue
            if not (np.isfinite(x) and np.isfinite(y)):
                report.malformed.append((line_no, "non-finite coordinates"))
                continue
            if image_id not in image_sizes:
                report.malformed.append((line_no, f"unknown image_id {image_id!r}"))
                continue
            h, w = image_sizes[image_id]
            if not (0.0 <= x < w and 0.0 <= y < h):
                report.dropped_out_of_bounds += 1
                continue
            groups.setdefault((image_id, subject_id), []).append((x, y))
            report.rows_kept += 1

    if report.rows_total and len(report.malformed) > MALFORMED_TOLERANCE * report.rows_total:
        examples = "; ".join(f"line {n}: {r}" for n, r in report.malformed[:5])
        raise DataError(
            f"{path}: {len(report.malformed)} of {report.rows_total} rows malformed "
            f"(> {MALFORMED_TOLERANCE:.0%} tolerance). First offenders: {examples}"
        )

    records = []
    for (image_id, subject_id), fixes in groups.items():
        if not fixes:
            report.empty_records.append((image_id, subject_id))
            continue
        records.append(
            EyeTrackingRecord(
                image_id=image_id,
                subject_id=subject_id,
                fixations=np.array(fixes, dtype=np.float64),
                image_size=image_sizes[image_id],
            )
        )
    return records, report


def normalize_record(record: EyeTrackingRecord) -> Scanpath:
    """Pixel coordinates -> normalised [0, 1]^2 (x / W, y / H)."""
    h, w = record.image_size
    fixes = record.fixations / np.array([w, h], dtype=np.float64)
    return Scanpath(fixes, stimulus_id=record.image_id, meta={"subject_id": record.subject_id})


def denormalize_scanpath(scanpath: Scanpath, image_size: tuple[int, int]) -> np.ndarray:
    """Normalised fixations -> pixel coordinates for the given (H, W)."""
    h, w = image_size
    return scanpath.fixations * np.array([w, h], dtype=np.float64)


def write_fixations(path: str | Path, rows: list[tuple[str, str, int, float, float]]) -> Path:
    """Write raw rows in the canonical schema. Coordinates use fixed 4-decimal formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIXATION_COLUMNS)
        for image_id, subject_id, idx, x, y in rows:
            writer.writerow([image_id, subject_id, idx, f"{x:.4f}", f"{y:.4f}"])
    return path


def write_scanpaths(
    path: str | Path,
    scanpaths: dict[str, Scanpath],
    method: str,
    image_sizes: dict[str, tuple[int, int]],
) -> Path:
    """Write generated scanpaths in the canonical fixation schema.

    The ``subject_id`` column holds the method name.  Images are written in
    sorted id order so identical inputs always produce identical bytes.
    """
    rows = []
    for image_id in sorted(scanpaths):
        pix = denormalize_scanpath(scanpaths[image_id], image_sizes[image_id])
        for idx, (x, y) in enumerate(pix):
            rows.append((image_id, method, idx, float(x), float(y)))
    return write_fixations(path, rows)


def load_scanpaths(
    path: str | Path,
    image_sizes: dict[str, tuple[int, int]],
) -> tuple[dict[str, dict[str, Scanpath]], LoadReport]:
    """Read a scanpath file back as ``{method: {image_id: Scanpath}}``."""
    records, report = load_fixations(path, image_sizes)
    out: dict[str, dict[str, Scanpath]] = {}
    for rec in records:
        sp = normalize_record(rec)
        out.setdefault(rec.subject_id, {})[rec.image_id] = sp
    return out, report


def load_image(path: str | Path) -> np.ndarray:
    """Load one image file as an (H, W, C) float array in [0, 1].

    C is 3 for colour images and 1 for greyscale; unreadable files raise
    ``DataError``.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.mode in ("L", "I;16", "I"):
                arr = np.asarray(img.convert("L"), dtype=np.float64)[:, :, None]
            else:
                arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    except Exception as exc:  # noqa: BLE001 - surfaced as a data problem
        raise DataError(f"cannot read image file {path}: {exc}") from exc
    return arr / 255.0


def load_images(directory: str | Path) -> dict[str, np.ndarray]:
    """Load every readable image in a directory, keyed by filename stem.

    Unreadable files are skipped with a warning.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"image directory not found: {directory}")
    images: dict[str, np.ndarray] = {}
    for p in sorted(directory.iterdir()):
        if not p.is_file():
            continue
        try:
            arr = load_image(p)
        except DataError as exc:
            warnings.warn(f"skipping unreadable image: {exc}", stacklevel=2)
            continue
        if p.stem in images:
            warnings.warn(f"duplicate image id {p.stem!r}; keeping the last file read", stacklevel=2)
        images[p.stem] = arr
    return images


def save_image(path: str | Path, image: np.ndarray) -> Path:
    """Write an (H, W, C) float image in [0, 1] as an 8-bit file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.clip(np.asarray(image), 0.0, 1.0)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(np.round(arr * 255.0).astype(np.uint8)).save(path)
    return path


# --------------------------------------------------------------------------
# Synthetic "quadrant shapes" dataset
# --------------------------------------------------------------------------

SHAPE_CLASSES = ("disk", "square", "cross")


def quadrant_of(x: float, y: float) -> int:
    """Quadrant index for a normalised point: 0 TL, 1 TR, 2 BL, 3 BR."""
    return int(x >= 0.5) + 2 * int(y >= 0.5)


def _shape_mask(h: int, w: int, kind: int, cy: float, cx: float, size: float) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    if kind == 0:  # disk
        return (yy - cy) ** 2 + (xx - cx) ** 2 <= size**2
    if kind == 1:  # square
        return (np.abs(yy - cy) <= size) & (np.abs(xx - cx) <= size)
    bar = max(1.0, size / 3.0)  # cross: two overlapping bars
    return ((np.abs(yy - cy) <= bar) & (np.abs(xx - cx) <= size)) | (
        (np.abs(xx - cx) <= bar) & (np.abs(yy - cy) <= size)
    )


def make_synthetic_dataset(
    n: int,
    kind: str = "quadrant-shapes",
    seed: int = 0,
    image_size: int = 32,
    channels: int = 3,
) -> list[LabeledStimulus]:
    """Generate labelled images of one bright shape on a dull textured background.

    Each sample places a disk, square, or cross (class label 0/1/2) fully
    inside one uniformly chosen quadrant.  The shape is bright (~0.9); the
    background is smoothed low-contrast noise (~0.45), so a blurred view
    reveals roughly *where* the shape is but not *which* shape it is.
    ``meta`` records the quadrant and the shape centre in normalised
    coordinates.  Deterministic for a fixed seed.
    """
    if kind != "quadrant-shapes":
        raise ValueError(f"unknown synthetic dataset kind: {kind!r}")
    if n < 1:
        raise ValueError("n must be positive")
    if image_size < 16:
        raise ValueError("image_size must be at least 16")
    rng = np.random.default_rng(seed)
    half = image_size // 2
    samples: list[LabeledStimulus] = []
    for _ in range(n):
        label = int(rng.integers(len(SHAPE_CLASSES)))
        quadrant = int(rng.integers(4))
        # Background: blurred white noise, squeezed to a narrow band around 0.45.
        noise = ndimage.gaussian_filter(rng.standard_normal((image_size, image_size)), sigma=2.0)
        noise = noise / max(np.abs(noise).max(), 1e-9)
        base = 0.45 + 0.10 * noise
        img = np.repeat(base[:, :, None], channels, axis=2)
        img += rng.uniform(-0.02, 0.02, size=(1, 1, channels))  # slight tint
        # Shape geometry: centre jittered inside the quadrant, extent kept
        # clear of the quadrant border so the shape never straddles quadrants.
        # On small images the sampled size is capped so that a non-empty
        # jitter window always remains (the cap only binds below ~24 px).
        size = float(rng.uniform(0.22, 0.30) * half)
        max_margin = half / 2.0 - 0.25
        size_cap = 0.75 * (max_margin - 1.0) if max_margin >= 5.0 else max_margin - 2.0
        size = min(size, size_cap)
        margin = size + max(1.0, size / 3.0) + 1.0
        qy, qx = divmod(quadrant, 2)  # quadrant = qx + 2 * qy
        lo_y, lo_x = qy * half, qx * half
        cy = float(rng.uniform(lo_y + margin, lo_y + half - margin))
        cx = float(rng.uniform(lo_x + margin, lo_x + half - margin))
        value = float(rng.uniform(0.85, 0.95))
        shape_mask = _shape_mask(image_size, image_size, label, cy, cx, size)
        img[shape_mask, :] = value
        img = np.clip(img, 0.0, 1.0)
        samples.append(
            LabeledStimulus(
                stimulus=img,
                target=label,
                meta={
                    "quadrant": quadrant,
                    "center": ((cx + 0.5) / image_size, (cy + 0.5) / image_size),
                    "shape": SHAPE_CLASSES[label],
                },
            )
        )
    return samples


def reference_scanpaths(
    samples: list[LabeledStimulus],
    image_ids: list[str],
    n_subjects: int = 4,
    length: int = 10,
    jitter: float = 0.02,
    seed: int = 0,
) -> list[EyeTrackingRecord]:
    """Simulated observers for the synthetic dataset.

    Each subject starts near the image centre and then dwells on the shape,
    with Gaussian jitter around both anchors.  Useful as a stand-in for human
    recordings when exercising the evaluation pipeline end to end.
    """
    if len(samples) != len(image_ids):
        raise ValueError("samples and image_ids must align")
    rng = np.random.default_rng(seed)
    records = []
    for sample, image_id in zip(samples, image_ids):
        h, w = sample.stimulus.shape[:2]
        cx, cy = sample.meta["center"]
        for s in range(n_subjects):
            anchors = np.full((length, 2), (cx, cy))
            anchors[0] = (0.5, 0.5)
            pts = anchors + rng.normal(0.0, jitter, size=(length, 2))
            pts = np.clip(pts, 0.0, 0.999)
            pix = pts * np.array([w, h], dtype=np.float64)
            records.append(
                EyeTrackingRecord(
                    image_id=image_id,
                    subject_id=f"ref{s:02d}",
                    fixations=pix,
                    image_size=(h, w),
                )
            )
    return records
