"""Raster primitives: grayscale morphology, contrast stretch, crop and file I/O.

Gray images are 2-D ``float64`` arrays indexed ``[row, col]``; binary masks
are 2-D ``bool`` arrays. Values stay real-valued through the pipeline and are
quantized to 8 bits only when written to disk.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import (
    DegenerateRange,
    EmptyImage,
    InvalidStructuringElement,
    IoFailure,
    OutOfBounds,
    UnsupportedFormat,
)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
READ_SUFFIXES = {".png", ".pgm", ".jpg", ".jpeg"}
WRITE_SUFFIXES = {".png", ".pgm"}


@dataclass(frozen=True)
class CropRect:
    x0: int
    y0: int
    w: int
    h: int

    @classmethod
    def parse(cls, text: str) -> "CropRect":
        """Parse ``"X,Y,W,H"``."""
        parts = [int(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"crop must be X,Y,W,H, got {text!r}")
        return cls(*parts)


def as_gray(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyImage("image has no pixels")
    return arr


def as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


def normalize_contrast(img) -> np.ndarray:
    """Linearly stretch intensities onto [0, 255]."""
    img = as_gray(img)
    lo, hi = img.min(), img.max()
    if hi == lo:
        raise DegenerateRange(f"constant image (value {lo}) cannot be stretched")
    out = 255.0 * (img - lo) / (hi - lo)
    # guard against 255.00000000000003 style overshoot
    return np.clip(out, 0.0, 255.0)


def _check_side(se_side: int) -> int:
    if int(se_side) != se_side or se_side < 1 or se_side % 2 == 0:
        raise InvalidStructuringElement(
            f"structuring element side must be a positive odd integer, got {se_side}"
        )
    return int(se_side)


def erode(img, se_side: int = 3) -> np.ndarray:
    """Window minimum over a square of side ``se_side`` (replicate borders)."""
    side = _check_side(se_side)
    img = as_gray(img)
    return ndimage.grey_erosion(img, size=(side, side), mode="nearest")


def dilate(img, se_side: int = 3) -> np.ndarray:
    """Window maximum over a square of side ``se_side`` (replicate borders)."""
    side = _check_side(se_side)
    img = as_gray(img)
    return ndimage.grey_dilation(img, size=(side, side), mode="nearest")


def opening(img, se_side: int = 3) -> np.ndarray:
    return dilate(erode(img, se_side), se_side)


def closing(img, se_side: int = 3) -> np.ndarray:
    return erode(dilate(img, se_side), se_side)


def remove_leaves(img, se_side: int = 3) -> np.ndarray:
    """White top-hat: subtract the opening so blobs vanish and thin roots stay.

    The opening rebuilds structures wider than the structuring element
    (leaves), so the difference keeps only what the element cannot fit in.
    """
    img = as_gray(img)
    return img - opening(img, se_side)


def crop(img, rect: CropRect) -> np.ndarray:
    img = np.asarray(img)
    h, w = img.shape[:2]
    if (
        rect.w < 1
        or rect.h < 1
        or rect.x0 < 0
        or rect.y0 < 0
        or rect.x0 + rect.w > w
        or rect.y0 + rect.h > h
    ):
        raise OutOfBounds(f"{rect} does not fit in a {w}x{h} image")
    return img[rect.y0 : rect.y0 + rect.h, rect.x0 : rect.x0 + rect.w].copy()


def to_uint8(img) -> np.ndarray:
    """Quantize for output; boolean masks become 0/255."""
    arr = np.asarray(img)
    if arr.dtype == bool:
        return np.where(arr, 255, 0).astype(np.uint8)
    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


def rescale_for_display(img) -> np.ndarray:
    """Min-max map onto [0, 255]; constant images map to zeros."""
    arr = np.asarray(img, dtype=np.float64)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    return 255.0 * (arr - lo) / (hi - lo)


def load_image(path) -> np.ndarray:
    """Read PNG/PGM/JPEG as a float gray image; color goes through fixed luma weights."""
    path = os.fspath(path)
    suffix = os.path.splitext(path)[1].lower()
    if suffix not in READ_SUFFIXES:
        raise UnsupportedFormat(f"cannot read {suffix or 'extensionless'} file {path}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("L", "1"):
                arr = np.asarray(im.convert("L"), dtype=np.float64)
            elif mode in ("RGB", "RGBA", "P", "LA", "CMYK", "YCbCr"):
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                arr = np.rint(rgb @ np.array(LUMA_WEIGHTS))
            else:
                raise UnsupportedFormat(f"unsupported pixel mode {mode} in {path}")
    except FileNotFoundError as exc:
        raise IoFailure(str(exc)) from exc
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(str(exc)) from exc
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return arr


def save_image(img, path) -> None:
    """Write an image or mask as 8-bit PNG or binary PGM."""
    path = os.fspath(path)
    suffix = os.path.splitext(path)[1].lower()
    if suffix not in WRITE_SUFFIXES:
        raise UnsupportedFormat(f"cannot write {suffix or 'extensionless'} file {path}")
    data = to_uint8(img)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D raster, got shape {data.shape}")
    try:
        Image.fromarray(data).save(path)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
