"""Fully-connected binary CRF over the enhanced image, solved by mean field.

Labels are indexed ``BACKGROUND = 0`` and ``ROOT = 1`` along the first axis of
every two-channel array. The pairwise kernel between pixels ``i`` and ``j`` is

    k(i, j) = exp(-|p_i - p_j|^2 / (2 theta_p^2) - (x_i - x_j)^2 / (2 theta_x^2))

with Potts compatibility, so a pixel only receives messages from the
opposite label's marginals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyImage, ExtentMismatch, InvalidParams, OracleTooLarge
from .raster import as_gray, as_mask

BACKGROUND = 0
ROOT = 1
BACKENDS = ("exact", "truncated")

# exact backend keeps the whole N x N kernel in memory up to this many entries
_DENSE_KERNEL_ENTRIES = 1 << 24


@dataclass(frozen=True)
class CrfParams:
    w_u: float = 2.0
    w_p: float = 1.0
    theta_p: float = 1.0
    theta_x: float | None = None  # None: estimate from the feature image
    max_iters: int = 10
    tol: float = 1e-3
    backend: str = "truncated"
    truncation_radius: int | None = None  # None: ceil(4 * theta_p)
    invert_unary: bool = False
    max_exact_pixels: int = 4096

    def __post_init__(self):
        if self.w_u < 0 or self.w_p < 0:
            raise InvalidParams("w_u and w_p must be nonnegative")
        if self.theta_p <= 0:
            raise InvalidParams("theta_p must be positive")
        if self.theta_x is not None and self.theta_x <= 0:
            raise InvalidParams("theta_x must be positive")
        if self.max_iters < 1:
            raise InvalidParams("max_iters must be >= 1")
        if self.tol < 0:
            raise InvalidParams("tol must be nonnegative")
        if self.backend not in BACKENDS:
            raise InvalidParams(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.truncation_radius is not None and self.truncation_radius < 1:
            raise InvalidParams("truncation_radius must be >= 1")

    @property
    def radius(self) -> int:
        if self.truncation_radius is not None:
            return int(self.truncation_radius)
        return max(1, math.ceil(4 * self.theta_p))


@dataclass(frozen=True)
class Marginals:
    """Per-pixel label probabilities, ``q[label, row, col]``."""

    q: np.ndarray
    iterations: int = 0
    converged: bool = False
    last_delta: float = float("nan")

    @property
    def q_fg(self) -> np.ndarray:
        return self.q[ROOT]

    @property
    def q_bg(self) -> np.ndarray:
        return self.q[BACKGROUND]

    @property
    def shape(self):
        return self.q.shape[1:]


def unary_costs(feat, w_u: float = 2.0, invert: bool = False) -> np.ndarray:
    """Two-channel unary cost map.

    High line strength is cheap for the root label: root costs
    ``w_u * (max - x)`` and background costs ``w_u * x``. ``invert`` swaps
    the channels (the literal printed polarity).
    """
    feat = as_gray(feat)
    x_max = feat.max()
    costs = np.empty((2,) + feat.shape)
    costs[ROOT] = w_u * (x_max - feat)
    costs[BACKGROUND] = w_u * feat
    if invert:
        costs = costs[::-1].copy()
    return costs


def pairwise_weight(p_i, p_j, x_i, x_j, theta_p: float, theta_x: float) -> float:
    d2 = float(np.sum((np.asarray(p_i, float) - np.asarray(p_j, float)) ** 2))
    return math.exp(-d2 / (2 * theta_p**2) - (x_i - x_j) ** 2 / (2 * theta_x**2))


def compatibility(y_i, y_j) -> int:
    return int(y_i != y_j)


def _require_theta_x(params: CrfParams) -> float:
    if params.theta_x is None:
        raise InvalidParams("theta_x must be set; call estimate_theta_x first")
    return params.theta_x


def energy(labels, feat, params: CrfParams) -> float:
    """Total CRF energy of a hard labeling, by brute force over pixel pairs.

    ``labels`` is a mask with True for root. Cost is quadratic in the pixel
    count, so images above ``params.max_exact_pixels`` are refused.
    """
    feat = as_gray(feat)
    labels = as_mask(labels)
    if labels.shape != feat.shape:
        raise ExtentMismatch(f"labels {labels.shape} vs features {feat.shape}")
    n = feat.size
    if n > params.max_exact_pixels:
        raise OracleTooLarge(f"{n} pixels exceeds the cap of {params.max_exact_pixels}")
    theta_x = _require_theta_x(params)

    costs = unary_costs(feat, params.w_u, params.invert_unary)
    y = labels.ravel().astype(np.intp)
    total = float(costs.reshape(2, -1)[y, np.arange(n)].sum())
    if params.w_p == 0:
        return total

    rows, cols = np.divmod(np.arange(n), feat.shape[1])
    x = feat.ravel()
    pair_sum = 0.0
    for i in range(n - 1):
        j = slice(i + 1, n)
        differ = y[j] != y[i]
        if not differ.any():
            continue
        d2 = (rows[j] - rows[i]) ** 2 + (cols[j] - cols[i]) ** 2
        k = np.exp(-d2 / (2 * params.theta_p**2) - (x[j] - x[i]) ** 2 / (2 * theta_x**2))
        pair_sum += float(k[differ].sum())
    return total + params.w_p * pair_sum


def estimate_theta_x(feat, n_samples: int = 10000, seed=0) -> float:
    """Median absolute feature difference over random pixel pairs.

    Pairs are drawn uniformly with replacement, redrawing any ``i == j``.
    The lower median is used so the estimate is always an observed distance;
    a zero median falls back to 1.0.
    """
    x = as_gray(feat).ravel()
    n = x.size
    if n < 2:
        raise EmptyImage("need at least two pixels to sample pairs")
    rng = np.random.default_rng(seed)
    i = rng.integers(n, size=n_samples)
    j = rng.integers(n, size=n_samples)
    same = np.flatnonzero(i == j)
    while same.size:
        j[same] = rng.integers(n, size=same.size)
        same = same[i[same] == j[same]]
    d = np.abs(x[i] - x[j])
    mid = (n_samples - 1) // 2
    med = float(np.partition(d, mid)[mid])
    return med if med > 0 else 1.0


def resolve_params(feat, params: CrfParams, seed=0) -> CrfParams:
    """Fill in theta_x from the features when it is left unset."""
    if params.theta_x is not None:
        return params
    return replace(params, theta_x=estimate_theta_x(feat, seed=seed))


def _softmax2(neg_energy: np.ndarray) -> np.ndarray:
    # written channel-symmetrically so swapping labels swaps outputs bit for bit
    m = np.maximum(neg_energy[0], neg_energy[1])
    a = np.exp(neg_energy[0] - m)
    b = np.exp(neg_energy[1] - m)
    z = a + b
    return np.stack([a / z, b / z])


class _TruncatedFilter:
    """Sum of k(i, j) q_j over j in the (2r+1)^2 window around i (self included)."""

    def __init__(self, feat, theta_p, theta_x, radius):
        h, w = feat.shape
        self.terms = []
        for dr in range(-radius, radius + 1):
            for dc in range(-radius, radius + 1):
                if abs(dr) >= h or abs(dc) >= w:
                    continue
                tgt = (slice(max(0, -dr), h - max(0, dr)), slice(max(0, -dc), w - max(0, dc)))
                src = (slice(max(0, dr), h - max(0, -dr)), slice(max(0, dc), w - max(0, -dc)))
                dx = feat[tgt] - feat[src]
                k = np.exp(-(dr * dr + dc * dc) / (2 * theta_p**2) - dx * dx / (2 * theta_x**2))
                self.terms.append((tgt, src, k))

    def __call__(self, q):
        out = np.zeros_like(q)
        for tgt, src, k in self.terms:
            out[(slice(None),) + tgt] += k * q[(slice(None),) + src]
        return out


class _ExactFilter:
    """Sum of k(i, j) q_j over every pixel j (self included).

    Small images keep the dense kernel matrix; larger ones recompute it in
    row blocks on each call, visiting each unordered pair once.
    """

    def __init__(self, feat, theta_p, theta_x):
        self.feat = feat
        self.a = 1.0 / (2 * theta_p**2)
        self.b = 1.0 / (2 * theta_x**2)
        h, w = feat.shape
        self.row_tab = np.exp(-self.a * np.arange(h, dtype=float) ** 2)
        c = np.arange(w, dtype=float)
        self.col_mat = np.exp(-self.a * (c[:, None] - c[None, :]) ** 2)
        n = feat.size
        self.dense = None
        if n * n <= _DENSE_KERNEL_ENTRIES:
            x = feat.ravel()
            k = np.subtract.outer(x, x)
            k *= k
            k *= -self.b
            np.exp(k, out=k)
            r = np.arange(h)
            k4 = k.reshape(h, w, h, w)
            k4 *= self.row_tab[np.abs(r[:, None] - r[None, :])][:, None, :, None]
            k4 *= self.col_mat[None, :, None, :]
            self.dense = k

    def __call__(self, q):
        # one channel at a time so both labels follow the same arithmetic path
        if self.dense is not None:
            return np.stack([(self.dense @ ch.ravel()).reshape(ch.shape) for ch in q])
        return self._streamed(q)

    def _streamed(self, q, chunk=4):
        x = self.feat
        h, w = x.shape
        out = np.zeros_like(q)
        for ri in range(h):
            xi = x[ri]
            for r0 in range(ri, h, chunk):
                r1 = min(h, r0 + chunk)
                e = xi[:, None, None] - x[None, r0:r1, :]
                e *= e
                e *= -self.b
                np.exp(e, out=e)
                e *= self.row_tab[r0 - ri : r1 - ri][None, :, None]
                e *= self.col_mat[:, None, :]
                flat = e.reshape(w, -1)
                for c in range(2):
                    out[c, ri] += flat @ q[c, r0:r1].ravel()
                if r0 == ri:
                    # pairs within row ri were already counted in both directions
                    flat[:, :w] = 0
                for c in range(2):
                    out[c, r0:r1] += (flat.T @ q[c, ri]).reshape(r1 - r0, w)
        return out


def build_filter(feat, params: CrfParams):
    feat = as_gray(feat)
    theta_x = _require_theta_x(params)
    if params.backend == "exact":
        if feat.size > params.max_exact_pixels:
            raise OracleTooLarge(
                f"{feat.size} pixels exceeds the exact-backend cap of {params.max_exact_pixels}"
            )
        return _ExactFilter(feat, params.theta_p, theta_x)
    return _TruncatedFilter(feat, params.theta_p, theta_x, params.radius)


def _update(q, unary, filt, w_p):
    if w_p == 0:
        return _softmax2(-unary)
    # drop the k(i, i) = 1 self term after filtering
    msg = filt(q) - q
    return _softmax2(-(unary + w_p * msg[::-1]))


def mean_field(unary, feat, params: CrfParams, filt=None) -> Marginals:
    """Parallel mean-field iterations from the unary softmax."""
    feat = as_gray(feat)
    unary = np.asarray(unary, dtype=np.float64)
    if unary.shape != (2,) + feat.shape:
        raise ExtentMismatch(f"unary {unary.shape} vs features {feat.shape}")
    if filt is None:
        filt = build_filter(feat, params)
    q = _softmax2(-unary)
    delta = float("nan")
    for it in range(1, params.max_iters + 1):
        new = _update(q, unary, filt, params.w_p)
        delta = float(np.abs(new - q).max())
        q = new
        if delta < params.tol:
            return Marginals(q, it, True, delta)
    return Marginals(q, params.max_iters, False, delta)


def mean_field_infer(feat, params: CrfParams | None = None, seed=0) -> Marginals:
    """Unary costs from ``feat`` followed by mean-field inference."""
    params = resolve_params(feat, params or CrfParams(), seed)
    feat = as_gray(feat)
    unary = unary_costs(feat, params.w_u, params.invert_unary)
    return mean_field(unary, feat, params)


def mean_field_update(marginals: Marginals, unary, feat, params: CrfParams) -> Marginals:
    """One extra synchronous update applied to existing marginals."""
    filt = build_filter(feat, params)
    q = _update(marginals.q, np.asarray(unary, float), filt, params.w_p)
    delta = float(np.abs(q - marginals.q).max())
    return Marginals(q, marginals.iterations + 1, delta < params.tol, delta)


def map_labels(m: Marginals) -> np.ndarray:
    """Root where its probability is strictly above one half."""
    return m.q_fg > 0.5
