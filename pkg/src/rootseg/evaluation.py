"""Skeleton-vs-reference overlap quality and per-class aggregation."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EmptySkeleton, ExtentMismatch, MissingPair, RootsegError
from .raster import as_mask, dilate, load_image

MANIFEST_FIELDS = ("image_id", "class", "pred_path", "ref_path")


def quality(skel, ref, tolerance_px: int = 0) -> float:
    """Fraction of skeleton pixels lying on the (optionally dilated) reference."""
    s = as_mask(skel)
    r = as_mask(ref)
    if s.shape != r.shape:
        raise ExtentMismatch(f"skeleton {s.shape} vs reference {r.shape}")
    n = int(s.sum())
    if n == 0:
        raise EmptySkeleton("skeleton has no foreground pixels")
    if tolerance_px < 0:
        raise ValueError("tolerance_px must be nonnegative")
    if tolerance_px > 0 and r.any():
        r = dilate(r.astype(np.float64), 2 * tolerance_px + 1) > 0.5
    return float((s & r).sum()) / n


def aggregate(values) -> tuple[float, float]:
    """Mean and population standard deviation."""
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan
    return float(v.mean()), float(v.std())


@dataclass
class ImageQuality:
    image_id: str
    class_tag: str
    q: float | None
    error: str | None = None


@dataclass
class QualityReport:
    per_image: list[ImageQuality] = field(default_factory=list)
    per_class: dict[str, dict[str, float]] = field(default_factory=dict)
    overall_mean: float = math.nan
    overall_std: float = math.nan
    tolerance_px: int = 0
    note: str = "std is the population standard deviation"

    @property
    def errors(self) -> list[ImageQuality]:
        return [e for e in self.per_image if e.error is not None]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_ok"] = len(self.per_image) - len(self.errors)
        d["n_failed"] = len(self.errors)
        return d

    def write(self, out_dir) -> tuple[str, str]:
        """Write ``report.json`` and ``report.csv``; returns both paths."""
        os.makedirs(out_dir, exist_ok=True)
        json_path = os.path.join(out_dir, "report.json")
        csv_path = os.path.join(out_dir, "report.csv")
        with open(json_path, "w") as fh:
            json.dump(_jsonable(self.to_dict()), fh, indent=2)
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["image_id", "class", "quality", "error"])
            for e in self.per_image:
                writer.writerow([e.image_id, e.class_tag, "" if e.q is None else f"{e.q:.6f}", e.error or ""])
        return json_path, csv_path


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    return obj


def read_manifest(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_FIELDS:
            raise ValueError(f"manifest header must be {','.join(MANIFEST_FIELDS)}")
        return list(reader)


def write_manifest(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MANIFEST_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in MANIFEST_FIELDS})


def _score_row(row, pred_dir, ref_dir, tolerance_px) -> ImageQuality:
    image_id = (row.get("image_id") or "").strip()
    tag = (row.get("class") or "").strip()
    if not image_id or None in row.values() or None in row:
        return ImageQuality(image_id or "?", tag, None, "MalformedRow: missing fields")
    pred = _resolve(row["pred_path"], pred_dir)
    ref = _resolve(row["ref_path"], ref_dir)
    try:
        for p in (pred, ref):
            if not os.path.exists(p):
                raise MissingPair(f"{p} not found")
        q = quality(load_image(pred) > 127, load_image(ref) > 127, tolerance_px)
    except RootsegError as exc:
        return ImageQuality(image_id, tag, None, f"{type(exc).__name__}: {exc}")
    return ImageQuality(image_id, tag, q)


def _resolve(path, directory):
    if os.path.isabs(path):
        return path
    return os.path.join(directory, path)


def evaluate_directory(pred_dir, ref_dir, manifest, tolerance_px: int = 0) -> QualityReport:
    """Score every manifest row; failures are recorded per row, not raised.

    ``manifest`` is a path or an already-parsed list of rows. Relative paths
    resolve against ``pred_dir`` / ``ref_dir``, falling back to the manifest's
    own folder (or the working directory for in-memory rows).
    """
    if isinstance(manifest, (str, os.PathLike)):
        rows = read_manifest(manifest)
        base = os.path.dirname(os.path.abspath(manifest))
    else:
        rows, base = list(manifest), os.getcwd()
    pred_dir = base if pred_dir is None else pred_dir
    ref_dir = base if ref_dir is None else ref_dir
    entries = [_score_row(row, pred_dir, ref_dir, tolerance_px) for row in rows]
    entries.sort(key=lambda e: e.image_id)
    return summarize(entries, tolerance_px)


def summarize(entries, tolerance_px: int = 0) -> QualityReport:
    ok = [e for e in entries if e.q is not None]
    per_class = {}
    for tag in sorted({e.class_tag for e in ok}):
        vals = [e.q for e in ok if e.class_tag == tag]
        mean, std = aggregate(vals)
        per_class[tag] = {"mean": mean, "std": std, "n": len(vals)}
    mean, std = aggregate(e.q for e in ok)
    return QualityReport(list(entries), per_class, mean, std, tolerance_px)
