"""Multi-scale oriented line detector.

For every pixel the detector compares the brightest oriented line average
through it with the average of the surrounding square window. Taking the
maximum of that difference over several line lengths gives the enhanced
feature image used by the CRF.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvalidLength
from .raster import as_gray

DEFAULT_LENGTHS = tuple(range(3, 16, 2))
DEFAULT_ANGLES = tuple(range(0, 180, 15))


@dataclass(frozen=True)
class LineDetectorParams:
    lengths: tuple[int, ...] = DEFAULT_LENGTHS
    angles_deg: tuple[float, ...] = DEFAULT_ANGLES

    def __post_init__(self):
        if not self.lengths:
            raise InvalidLength("at least one line length is required")
        for length in self.lengths:
            _check_length(length)
        if not self.angles_deg:
            raise ValueError("at least one orientation is required")
        for a in self.angles_deg:
            if not 0 <= a < 180:
                raise ValueError(f"angle {a} outside [0, 180)")


def _check_length(length) -> int:
    if int(length) != length or length < 3 or length % 2 == 0:
        raise InvalidLength(f"line length must be odd and >= 3, got {length}")
    return int(length)


def _round_half_away(v: np.ndarray) -> np.ndarray:
    # symmetric about zero so offsets for k and -k mirror each other
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def line_offsets(length: int, angle_deg: float) -> np.ndarray:
    """Integer (drow, dcol) offsets of the ``length`` samples of one line.

    The angle is counterclockwise from the +column axis; rows grow downward,
    hence the negated sine. Duplicates produced by rounding are kept.
    """
    half = (length - 1) // 2
    k = np.arange(-half, half + 1, dtype=np.float64)
    theta = np.deg2rad(angle_deg)
    dcol = _round_half_away(k * np.cos(theta))
    drow = _round_half_away(-k * np.sin(theta))
    return np.stack([drow, dcol], axis=1).astype(np.intp)


def _line_means(img: np.ndarray, length: int, angles) -> np.ndarray:
    """Stack of per-angle line averages, shape (len(angles), H, W)."""
    h, w = img.shape
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    out = np.empty((len(angles), h, w))
    for a, angle in enumerate(angles):
        acc = np.zeros((h, w))
        for dr, dc in line_offsets(length, angle):
            rr = np.clip(rows + dr, 0, h - 1)
            cc = np.clip(cols + dc, 0, w - 1)
            acc += img[rr, cc]
        out[a] = acc / length
    return out


def window_mean(img, length: int) -> np.ndarray:
    img = as_gray(img)
    return ndimage.uniform_filter(img, size=length, mode="nearest")


def line_strength(img, length: int, angles=DEFAULT_ANGLES) -> np.ndarray:
    """Best oriented line mean minus the square-window mean, per pixel."""
    length = _check_length(length)
    if len(angles) == 0:
        raise ValueError("at least one orientation is required")
    img = as_gray(img)
    best = _line_means(img, length, angles).max(axis=0)
    return best - window_mean(img, length)


def best_orientation(img, length: int, angles=DEFAULT_ANGLES) -> np.ndarray:
    """Angle (degrees) of the brightest line through each pixel; first wins ties."""
    length = _check_length(length)
    img = as_gray(img)
    idx = _line_means(img, length, angles).argmax(axis=0)
    return np.asarray(angles, dtype=np.float64)[idx]


def enhance(img, params: LineDetectorParams | None = None) -> np.ndarray:
    """Pixelwise max of line strengths over all configured lengths.

    Values are signed and left unscaled.
    """
    params = params or LineDetectorParams()
    img = as_gray(img)
    out = None
    for length in params.lengths:
        s = line_strength(img, length, params.angles_deg)
        out = s if out is None else np.maximum(out, s)
    return out
