"""Synthetic root images with exact centerline ground truth.

A main root is a mean-reverting random walk from the top centre downward;
laterals branch off it at random heights. Roots are drawn brighter than the
background so they look like the top-hat output the pipeline works on.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidParams
from .evaluation import write_manifest
from .raster import save_image

MARGIN = 6


@dataclass(frozen=True)
class SynthParams:
    width: int = 256
    height: int = 256
    n_laterals: int = 3
    main_root_wobble: float = 4.0  # heading noise std, degrees per step
    lateral_angle_range: tuple[float, float] = (35.0, 75.0)  # away from straight down
    root_intensity: float = 180.0
    background_intensity: float = 60.0
    noise_sigma: float = 8.0
    leaf_radius: int = 0
    stroke_width: int = 2

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise InvalidParams("synthetic images must be at least 32x32")
        if self.root_intensity <= self.background_intensity:
            raise InvalidParams("root_intensity must exceed background_intensity")
        if self.noise_sigma < 0:
            raise InvalidParams("noise_sigma must be nonnegative")
        if self.n_laterals < 0 or self.leaf_radius < 0 or self.stroke_width < 1:
            raise InvalidParams("counts and sizes must be nonnegative (stroke_width >= 1)")
        lo, hi = self.lateral_angle_range
        if not 0 < lo <= hi < 90:
            raise InvalidParams("lateral_angle_range must satisfy 0 < lo <= hi < 90")


def _walk(rng, start, heading, n_steps, wobble, params, pull=0.1):
    """Unit-step random walk with heading noise pulled back toward ``heading``."""
    r, c = start
    pts = [(r, c)]
    dev = 0.0
    lo_r, hi_r = MARGIN, params.height - 1 - MARGIN
    lo_c, hi_c = MARGIN, params.width - 1 - MARGIN
    for _ in range(n_steps):
        dev = (1 - pull) * dev + rng.normal(0.0, math.radians(wobble))
        a = heading + dev
        r, c = r + math.sin(a), c + math.cos(a)
        if not (lo_r <= r <= hi_r and lo_c <= c <= hi_c):
            break
        pts.append((r, c))
    return pts


def _rasterize(pts):
    """Pixel path through float points: round, dedupe, then drop corner pixels."""
    pix = []
    for r, c in pts:
        p = (math.floor(r + 0.5), math.floor(c + 0.5))
        if not pix or pix[-1] != p:
            pix.append(p)
    out = pix[:1]
    for k in range(1, len(pix) - 1):
        prev, nxt = out[-1], pix[k + 1]
        if max(abs(prev[0] - nxt[0]), abs(prev[1] - nxt[1])) <= 1:
            continue  # prev and next already touch; this pixel is a staircase corner
        out.append(pix[k])
    if len(pix) > 1:
        out.append(pix[-1])
    return out


def _too_close(path, occupied: np.ndarray, skip: int) -> bool:
    for r, c in path[skip:]:
        if occupied[r, c]:
            return True
    return False


def generate(params: SynthParams | None = None, seed=0):
    """Render one image; returns ``(gray_image, centerline_mask)``."""
    params = params or SynthParams()
    rng = np.random.default_rng(seed)
    h, w = params.height, params.width
    centre = np.zeros((h, w), dtype=bool)

    start = (float(MARGIN + 2), (w - 1) / 2.0)
    main = _rasterize(_walk(rng, start, math.pi / 2, 4 * h, params.main_root_wobble, params))
    for r, c in main:
        centre[r, c] = True

    lo, hi = params.lateral_angle_range
    n_main = len(main)
    spacing = max(8, n_main // (2 * max(1, params.n_laterals)))
    used_origins: list[int] = []
    for n in range(params.n_laterals):
        # keep clear of earlier roots, except near the branch point itself
        guard = ndimage.binary_dilation(centre, structure=np.ones((7, 7), bool))
        touching = ndimage.binary_dilation(centre, structure=np.ones((3, 3), bool))
        for _attempt in range(1000):
            k = int(rng.integers(int(0.15 * n_main), max(int(0.15 * n_main) + 1, int(0.8 * n_main))))
            if any(abs(k - o) < spacing for o in used_origins):
                continue
            side = 1 if rng.random() < 0.5 else -1
            dev = math.radians(rng.uniform(lo, hi))
            heading = math.pi / 2 - side * dev
            length = int(rng.uniform(0.2, 0.4) * h)
            r0, c0 = main[k]
            path = _rasterize(_walk(rng, (float(r0), float(c0)), heading, length, params.main_root_wobble, params))
            # only the first two pixels may touch existing roots, so each
            # branch point stays a single compact junction
            if len(path) < 15 or _too_close(path, guard, skip=6) or _too_close(path, touching, skip=3):
                continue
            for r, c in path:
                centre[r, c] = True
            used_origins.append(k)
            break

    bright = centre.copy()
    if params.stroke_width > 1:
        sw = params.stroke_width
        bright = ndimage.binary_dilation(centre, structure=np.ones((sw, sw), bool))
    if params.leaf_radius > 0:
        bright |= _leaves(h, w, start, params.leaf_radius)

    img = np.where(bright, params.root_intensity, params.background_intensity).astype(np.float64)
    if params.noise_sigma > 0:
        img = img + rng.normal(0.0, params.noise_sigma, size=img.shape)
    img = np.clip(np.rint(img), 0, 255)
    return img, centre


def _leaves(h, w, start, radius):
    """Two ellipsoidal blobs either side of the root origin."""
    rr, cc = np.mgrid[0:h, 0:w]
    r0, c0 = start
    mask = np.zeros((h, w), dtype=bool)
    for side in (-1, 1):
        cr, cc0 = r0 + 0.3 * radius, c0 + side * 1.1 * radius
        mask |= ((rr - cr) / (0.7 * radius)) ** 2 + ((cc - cc0) / radius) ** 2 <= 1.0
    return mask


def junction_clusters(skel) -> int:
    """Number of 8-connected groups of pixels with three or more skeleton neighbours."""
    skel = np.asarray(skel, dtype=bool)
    counts = ndimage.convolve(skel.astype(np.int32), np.ones((3, 3), np.int32), mode="constant") - skel
    junctions = skel & (counts >= 3)
    _, n = ndimage.label(junctions, structure=np.ones((3, 3), bool))
    return int(n)


def generate_suite(n: int, params: SynthParams | None, seed, out_dir, class_tag="synthetic", pred_subdir="pred"):
    """Write ``n`` image / ground-truth pairs and a manifest; returns the manifest path.

    Image ``i`` uses seed ``seed + i``. Manifest prediction paths point at
    ``<out_dir>/<pred_subdir>/<id>_skeleton.png``, where ``rootseg run --out``
    writes its skeletons.
    """
    params = params or SynthParams()
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for i in range(n):
        image_id = f"synth_{i:03d}"
        img, gt = generate(params, seed + i)
        save_image(img, os.path.join(out_dir, f"{image_id}.png"))
        save_image(gt, os.path.join(out_dir, f"{image_id}_gt.png"))
        rows.append(
            {
                "image_id": image_id,
                "class": class_tag,
                "pred_path": f"{pred_subdir}/{image_id}_skeleton.png",
                "ref_path": f"{image_id}_gt.png",
            }
        )
    manifest = os.path.join(out_dir, "manifest.csv")
    write_manifest(manifest, rows)
    return manifest
