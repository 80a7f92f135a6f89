"""Mask postprocessing: gap closing, thinning and small-segment removal."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import as_mask, closing

EIGHT = np.ones((3, 3), dtype=bool)
FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class ComponentMap:
    labels: np.ndarray  # 0 = background, components numbered 1..K in scan order
    areas: np.ndarray  # areas[k - 1] = pixel count of component k

    @property
    def count(self) -> int:
        return int(self.areas.size)


def fill_gaps(mask, se_side: int = 3) -> np.ndarray:
    """Binary closing with a square element (replicate borders)."""
    mask = as_mask(mask)
    return closing(mask.astype(np.float64), se_side) > 0.5


def label_components(mask, connectivity: int = 8) -> ComponentMap:
    mask = as_mask(mask)
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    structure = EIGHT if connectivity == 8 else FOUR
    labels, k = ndimage.label(mask, structure=structure)
    areas = np.bincount(labels.ravel(), minlength=k + 1)[1:]
    return ComponentMap(labels, areas)


def filter_small(skel, alpha: int = 20) -> np.ndarray:
    """Drop 8-connected components with fewer than ``alpha`` pixels."""
    comps = label_components(skel)
    keep = np.concatenate([[False], comps.areas >= alpha])
    return keep[comps.labels]


def _neighbours(img: np.ndarray):
    """P2..P9 clockwise from north, each shaped like ``img`` (outside = 0)."""
    p = np.pad(img, 1)
    h, w = img.shape
    shifts = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]
    return [p[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w] for dr, dc in shifts]


def _local(img, r, c):
    h, w = img.shape
    out = []
    for dr, dc in ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)):
        rr, cc = r + dr, c + dc
        out.append(int(0 <= rr < h and 0 <= cc < w and img[rr, cc]))
    return out


def _zs_candidates(img: np.ndarray, first_pass: bool) -> np.ndarray:
    """Zhang-Suen deletion test evaluated in parallel on the pass-start image."""
    n = [x.astype(np.int32) for x in _neighbours(img)]
    p2, p3, p4, p5, p6, p7, p8, p9 = n
    b = sum(n)
    a = sum(((n[k] == 0) & (n[(k + 1) % 8] == 1)).astype(np.int32) for k in range(8))
    if first_pass:
        side = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
    else:
        side = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
    # tip of a two-pixel-thick staircase: exactly two neighbours, side by side.
    # Zhang-Suen would peel these one per iteration until the line is gone.
    tip = (b == 2) & (a == 1) & (p2 + p4 + p6 + p8 == 1)
    return (img == 1) & (b >= 2) & (b <= 6) & (a == 1) & side & ~tip


def _still_removable(ring) -> bool:
    """Not an end point and 8-simple (Yokoi connectivity number of one)."""
    if sum(ring) < 2:
        return False
    inv = [1 - v for v in ring]
    yokoi = sum(inv[k] - inv[k] * inv[(k + 1) % 8] * inv[(k + 2) % 8] for k in (0, 2, 4, 6))
    return yokoi == 1


def skeletonize(mask) -> np.ndarray:
    """Thin a mask to one-pixel-wide curves.

    Candidates come from Zhang-Suen's two subiterations evaluated in
    parallel, but each one is removed only if it is still a simple non-end
    point of the current image. Plain parallel removal can erase a 2x2 block
    or a two-pixel-thick diagonal; the re-test and the staircase-tip guard
    prevent both.
    """
    img = as_mask(mask).astype(np.uint8).copy()
    while True:
        changed = False
        for first_pass in (True, False):
            for r, c in zip(*np.nonzero(_zs_candidates(img, first_pass))):
                if _still_removable(_local(img, r, c)):
                    img[r, c] = 0
                    changed = True
        if not changed:
            return img.astype(bool)


def postprocess(mask, alpha: int = 20):
    """Close gaps, thin, then drop short segments; returns (closed, skeleton, final)."""
    closed = fill_gaps(mask)
    skel = skeletonize(closed)
    return closed, skel, filter_small(skel, alpha)
