"""OTB-style sequence loading, tracking metrics, and result serialization.

Sequences follow the on-disk convention `<seq>/img/*.jpg|png` plus a
`groundtruth_rect.txt` with one "x,y,w,h" rectangle per frame (1-based
coordinates; converted to 0-based internally). Evaluation is one-pass:
the tracker is initialized on frame 1 and never reset.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .tracker import BoundingBox

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".pgm"}
GROUND_TRUTH_NAMES = ("groundtruth_rect.txt", "groundtruth.txt")

PRECISION_THRESHOLDS = np.arange(0.0, 51.0, 1.0)  # 51 samples, 1 px apart
SUCCESS_THRESHOLDS = np.linspace(0.0, 1.0, 21)  # 21 samples, 0.05 apart

_SEPARATORS = re.compile(r"[,\t ]+")


class SequenceFormatError(ValueError):
    """On-disk sequence data is missing or malformed."""


@dataclass
class Sequence:
    name: str
    frame_paths: list[Path]
    ground_truth: list[BoundingBox | None]
    attributes: list[str] = field(default_factory=list)


@dataclass
class EvaluationResult:
    """Per-frame metrics plus sampled precision/success curves.

    Frames without usable ground truth carry NaN in the per-frame lists and
    are excluded from the curves and summary scores (n_excluded counts them).
    """

    per_frame_cle: list[float]
    per_frame_overlap: list[float]
    precision_at_20: float
    success_auc: float
    precision_thresholds: list[float]
    precision_values: list[float]
    success_thresholds: list[float]
    success_values: list[float]
    mean_cle: float
    mean_overlap: float
    n_frames: int
    n_excluded: int


def parse_rect_line(line: str) -> BoundingBox | None:
    """Parse one "x,y,w,h" ground-truth line (1-based) into a 0-based box.

    Returns None for NaN entries (occluded/absent annotations).
    """
    parts = [p for p in _SEPARATORS.split(line.strip()) if p]
    if len(parts) != 4:
        raise ValueError(f"expected 4 fields, got {len(parts)}")
    x, y, w, h = (float(p) for p in parts)
    if any(math.isnan(v) for v in (x, y, w, h)):
        return None
    return BoundingBox(x=x - 1.0, y=y - 1.0, w=w, h=h)


def _read_rect_file(path: Path) -> list[BoundingBox | None]:
    boxes: list[BoundingBox | None] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            boxes.append(parse_rect_line(line))
        except ValueError as err:
            raise SequenceFormatError(f"{path}:{lineno}: {err}") from err
    return boxes


def list_frame_paths(dir_path) -> list[Path]:
    """Image files of a sequence directory, sorted by filename.

    Looks in `<dir>/img` first (the OTB layout), then in the directory itself.
    """
    root = Path(dir_path)
    for candidate in (root / "img", root):
        if candidate.is_dir():
            frames = sorted(
                p for p in candidate.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
            )
            if frames:
                return frames
    raise SequenceFormatError(f"no image files found under {root}")


def load_sequence(dir_path) -> Sequence:
    """Load an OTB-style sequence directory (frames + ground-truth rects)."""
    root = Path(dir_path)
    if not root.is_dir():
        raise SequenceFormatError(f"{root} is not a directory")
    frames = list_frame_paths(root)
    gt_path = next((root / name for name in GROUND_TRUTH_NAMES if (root / name).is_file()), None)
    if gt_path is None:
        raise SequenceFormatError(f"no ground-truth rectangle file in {root}")
    boxes = _read_rect_file(gt_path)
    if len(boxes) != len(frames):
        raise SequenceFormatError(
            f"{root}: {len(frames)} frames but {len(boxes)} ground-truth boxes"
        )
    attr_path = root / "attributes.txt"
    attributes = (
        [a.strip() for a in attr_path.read_text().splitlines() if a.strip()]
        if attr_path.is_file()
        else []
    )
    return Sequence(name=root.name, frame_paths=frames, ground_truth=boxes, attributes=attributes)


def load_image(path) -> np.ndarray:
    """Decode an image file to a uint8 array, (H, W) gray or (H, W, 3) RGB."""
    with Image.open(path) as img:
        if img.mode == "L":
            return np.asarray(img)
        return np.asarray(img.convert("RGB"))


def center_location_error(pred: BoundingBox, gt: BoundingBox) -> float:
    """Euclidean distance between box centers, in pixels."""
    (px, py), (gx, gy) = pred.center, gt.center
    return math.hypot(px - gx, py - gy)


def overlap_ratio(pred: BoundingBox, gt: BoundingBox) -> float:
    """Intersection-over-union of the two boxes; 0 when disjoint."""
    ix = min(pred.x + pred.w, gt.x + gt.w) - max(pred.x, gt.x)
    iy = min(pred.y + pred.h, gt.y + gt.h) - max(pred.y, gt.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = pred.w * pred.h + gt.w * gt.h - inter
    # rounding in the +/- chain can push the ratio an ulp past 1
    return min(1.0, max(0.0, inter / union))


def precision_curve(cles, thresholds=None) -> np.ndarray:
    """Fraction of frames with CLE <= threshold, per threshold."""
    cles = np.asarray(list(cles), dtype=float)
    if cles.size == 0:
        raise ValueError("cannot compute a precision curve from zero frames")
    thresholds = PRECISION_THRESHOLDS if thresholds is None else np.asarray(thresholds, dtype=float)
    return (cles[None, :] <= thresholds[:, None]).mean(axis=1)


def precision_at(cles, threshold: float = 20.0) -> float:
    cles = np.asarray(list(cles), dtype=float)
    if cles.size == 0:
        raise ValueError("cannot compute precision from zero frames")
    return float((cles <= threshold).mean())


def success_curve(overlaps, thresholds=None) -> np.ndarray:
    """Fraction of frames with overlap strictly greater than each threshold."""
    overlaps = np.asarray(list(overlaps), dtype=float)
    if overlaps.size == 0:
        raise ValueError("cannot compute a success curve from zero frames")
    thresholds = SUCCESS_THRESHOLDS if thresholds is None else np.asarray(thresholds, dtype=float)
    return (overlaps[None, :] > thresholds[:, None]).mean(axis=1)


def success_auc(overlaps) -> float:
    """Mean of the success curve sampled on the default 21-point grid."""
    return float(success_curve(overlaps).mean())


def evaluate(pred_boxes: list[BoundingBox], sequence: Sequence) -> EvaluationResult:
    """One-pass evaluation of tracker output boxes against a sequence's ground truth."""
    if len(pred_boxes) != len(sequence.frame_paths):
        raise ValueError(
            f"box count {len(pred_boxes)} does not match frame count "
            f"{len(sequence.frame_paths)} for sequence {sequence.name!r}"
        )
    per_cle: list[float] = []
    per_ov: list[float] = []
    for pred, gt in zip(pred_boxes, sequence.ground_truth):
        if gt is None:
            per_cle.append(math.nan)
            per_ov.append(math.nan)
        else:
            per_cle.append(center_location_error(pred, gt))
            per_ov.append(overlap_ratio(pred, gt))

    cles = np.asarray(per_cle)
    ovs = np.asarray(per_ov)
    valid = ~np.isnan(cles)
    if not valid.any():
        raise ValueError(f"sequence {sequence.name!r} has no valid ground-truth boxes")
    v_cle, v_ov = cles[valid], ovs[valid]

    return EvaluationResult(
        per_frame_cle=per_cle,
        per_frame_overlap=per_ov,
        precision_at_20=precision_at(v_cle),
        success_auc=success_auc(v_ov),
        precision_thresholds=PRECISION_THRESHOLDS.tolist(),
        precision_values=precision_curve(v_cle).tolist(),
        success_thresholds=SUCCESS_THRESHOLDS.tolist(),
        success_values=success_curve(v_ov).tolist(),
        mean_cle=float(v_cle.mean()),
        mean_overlap=float(v_ov.mean()),
        n_frames=len(pred_boxes),
        n_excluded=int((~valid).sum()),
    )


def write_boxes_file(boxes: list[BoundingBox], path) -> None:
    """Write tracker output boxes, one "x,y,w,h" line per frame, 1-based."""
    with open(path, "w", encoding="ascii") as fh:
        for b in boxes:
            fh.write(
                f"{float(b.x) + 1.0!r},{float(b.y) + 1.0!r},{float(b.w)!r},{float(b.h)!r}\n"
            )


def read_boxes_file(path) -> list[BoundingBox]:
    """Read a tracker output (or ground-truth) rect file into 0-based boxes."""
    boxes = _read_rect_file(Path(path))
    if not boxes:
        raise SequenceFormatError(f"{path}: no boxes found")
    if any(b is None for b in boxes):
        raise SequenceFormatError(f"{path}: NaN entries are not valid tracker output")
    return boxes


def result_to_dict(result: EvaluationResult, name: str | None = None) -> dict:
    payload = {
        "precision_at_20": result.precision_at_20,
        "success_auc": result.success_auc,
        "mean_cle": result.mean_cle,
        "mean_overlap": result.mean_overlap,
        "n_frames": result.n_frames,
        "n_excluded": result.n_excluded,
        "precision_thresholds": result.precision_thresholds,
        "precision_values": result.precision_values,
        "success_thresholds": result.success_thresholds,
        "success_values": result.success_values,
    }
    if name is not None:
        payload = {"sequence": name, **payload}
    return payload


def write_result_json(result: EvaluationResult, path, name: str | None = None) -> None:
    Path(path).write_text(json.dumps(result_to_dict(result, name), indent=2) + "\n")


def write_result_csv(result: EvaluationResult, path) -> None:
    """One row per frame: frame (1-based), cle, overlap; NaN for excluded frames."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "cle", "overlap"])
        for i, (cle, ov) in enumerate(zip(result.per_frame_cle, result.per_frame_overlap), 1):
            writer.writerow([i, repr(float(cle)), repr(float(ov))])


def write_run_summary(results: dict[str, EvaluationResult], path) -> None:
    """Aggregate JSON across sequences: per-sequence scores plus means."""
    sequences = {
        name: {
            "precision_at_20": r.precision_at_20,
            "success_auc": r.success_auc,
            "mean_cle": r.mean_cle,
            "n_frames": r.n_frames,
            "n_excluded": r.n_excluded,
        }
        for name, r in results.items()
    }
    summary = {
        "n_sequences": len(results),
        "mean_precision_at_20": float(np.mean([r.precision_at_20 for r in results.values()])),
        "mean_success_auc": float(np.mean([r.success_auc for r in results.values()])),
        "sequences": sequences,
    }
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")
