"""Pattern operators applied to corresponding pixel pairs.

Two pattern kinds exist: ``random`` draws uniform 8-bit values, while
``histogram`` analyzes the scanline content around both corresponding
points and picks the intensity farthest from everything already present.
The chosen value is alpha-blended into the left pixel and splatted with
sub-pixel weights onto the two right-image pixels straddling x' = x - d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import StereoVpError, iround

__all__ = [
    "PatternConfig",
    "random_pattern_value",
    "merged_histogram",
    "select_distinct_value",
    "histogram_pattern_value",
    "blend_pixel",
    "splat_right",
    "project_pointwise",
]


@dataclass(frozen=True)
class PatternConfig:
    kind: str = "random"  # random | histogram
    alpha: float = 0.4
    search_length: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("random", "histogram"):
            raise StereoVpError(f"unknown pattern kind {self.kind!r}")
        if not (0.0 <= self.alpha <= 1.0):
            raise StereoVpError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.search_length < 1:
            raise StereoVpError("search_length must be >= 1")


def random_pattern_value(rng: np.random.Generator) -> int:
    """One integer uniform on [0, 255]."""
    return int(rng.integers(0, 256))


def _window_bounds(center: int, half_lo: int, half_hi: int, limit: int) -> tuple[int, int]:
    return max(0, center - half_lo), min(limit, center + half_hi + 1)


def merged_histogram(
    left: np.ndarray,
    right: np.ndarray,
    x: int,
    x_prime: float,
    y: int,
    length: int,
    height: int = 3,
) -> np.ndarray:
    """256-bin histogram of the two search windows, merged.

    Windows are ``height`` rows by ``length`` columns, centered at (x, y) in
    the left image and (round(x'), y) in the right one, truncated at image
    borders. Inputs are single-channel uint8 planes.
    """
    h, w = left.shape
    lo_c, hi_c = length // 2, (length - 1) // 2
    lo_r, hi_r = height // 2, (height - 1) // 2
    hist = np.zeros(256, dtype=np.int64)
    y0, y1 = _window_bounds(y, lo_r, hi_r, h)
    x0, x1 = _window_bounds(x, lo_c, hi_c, w)
    if y1 > y0 and x1 > x0:
        hist += np.bincount(left[y0:y1, x0:x1].ravel(), minlength=256)
    xr = iround(x_prime)
    xr0, xr1 = _window_bounds(xr, lo_c, hi_c, w)
    if y1 > y0 and xr1 > xr0:
        hist += np.bincount(right[y0:y1, xr0:xr1].ravel(), minlength=256)
    return hist


def _hdist_all(hist: np.ndarray) -> np.ndarray:
    """Distance from each intensity to the nearest filled bin (two linear passes)."""
    big = 1 << 20
    dist = np.full(256, big, dtype=np.int64)
    dist[hist > 0] = 0
    for i in range(1, 256):
        if dist[i - 1] + 1 < dist[i]:
            dist[i] = dist[i - 1] + 1
    for i in range(254, -1, -1):
        if dist[i + 1] + 1 < dist[i]:
            dist[i] = dist[i + 1] + 1
    return dist


def select_distinct_value(hist: np.ndarray) -> int:
    """Pick the empty bin maximizing the distance from any filled bin.

    If every bin is occupied, fall back to the bin with minimum occupancy.
    Ties break toward the smallest intensity. An all-empty histogram (both
    windows fully out of bounds) returns 0.
    """
    if not np.any(hist > 0):
        return 0
    if np.all(hist > 0):
        return int(np.argmin(hist))
    dist = _hdist_all(hist)
    return int(np.argmax(dist))


def histogram_pattern_value(
    left: np.ndarray, right: np.ndarray, x: int, x_prime: float, y: int, length: int
) -> int:
    """Pointwise histogram-based pattern value (3-row search windows)."""
    return select_distinct_value(merged_histogram(left, right, x, x_prime, y, length, height=3))


def blend_pixel(original: float, pattern: float, alpha: float) -> float:
    """(1 - alpha) * original + alpha * pattern, kept real until quantization."""
    return (1.0 - alpha) * original + alpha * pattern


def splat_right(right: np.ndarray, x_prime: float, y: int, value: float) -> bool:
    """Write ``value`` at the two pixels straddling x', weighted by beta = x' - floor(x').

    The floor pixel keeps a beta share of its content, the ceil pixel a
    (1 - beta) share. Integer x' writes the floor pixel once. Operates on a
    float image plane in place; returns False when both targets fall
    outside the image (the write is skipped).
    """
    w = right.shape[1]
    x_lo = math.floor(x_prime)
    beta = x_prime - x_lo
    wrote = False
    if 0 <= x_lo < w:
        right[y, x_lo] = beta * right[y, x_lo] + (1.0 - beta) * value
        wrote = True
    if beta > 0.0:
        x_hi = x_lo + 1
        if 0 <= x_hi < w:
            right[y, x_hi] = (1.0 - beta) * right[y, x_hi] + beta * value
            wrote = True
    return wrote


def project_pointwise(pair, hints, occ, cfg: PatternConfig, policy: str = "FGD"):
    """Project single-pixel patterns at every usable hint.

    Equivalent to patch projection with a degenerate 1x1 patch; see
    patching.project_patches for the full contract.
    """
    from .patching import PatchConfig, project_patches

    return project_patches(pair, hints, occ, cfg, PatchConfig(strategy="none"), policy=policy)
