"""Patch-based virtual projection with overlap arbitration.

Extends pointwise patterning to spatial patches: fixed N x N, a size that
shrinks with distance, or a bilateral mask adapting the patch shape to the
reference image content. Every strategy routes pixel ownership through a
weight buffer so that overlapping patches resolve deterministically: the
hint with the larger bilateral weight wins a contested pixel, ties going
to the earlier hint in row-major order.

Projection runs in two phases (claim, then commit) and reads image content
exclusively from a snapshot of the inputs, so the outcome is independent
of hint processing order wherever ownership is not contested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Image, StereoPair, StereoVpError, iround, quantize_u8
from .occlusion import Directive, Policy, apply_policy
from .patterning import PatternConfig, merged_histogram, select_distinct_value

__all__ = [
    "PatchConfig",
    "ProjectionDebug",
    "distance_patch_size",
    "adaptive_weight",
    "project_patches",
]

STRATEGIES = ("none", "fixed", "distance", "adaptive")


@dataclass(frozen=True)
class PatchConfig:
    strategy: str = "adaptive"
    n_max: int = 7
    phi: float = 0.3
    sigma_s: float = 2.0
    sigma_c: float = 1.0
    t_w: float = 0.001
    uniform_fill: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise StereoVpError(f"unknown patch strategy {self.strategy!r}")
        if self.n_max < 1 or self.n_max % 2 == 0:
            raise StereoVpError("n_max must be odd and >= 1")
        if self.phi <= 0 or self.sigma_s <= 0 or self.sigma_c <= 0:
            raise StereoVpError("phi, sigma_s and sigma_c must be positive")
        if not (0 < self.t_w < 1):
            raise StereoVpError("t_w must be in (0, 1)")


@dataclass(frozen=True)
class ProjectionDebug:
    """Per-pixel ownership (hint index, -1 = untouched) on each image."""

    left_owner: np.ndarray
    right_owner: np.ndarray


def distance_patch_size(d: float, d_min: float, d_max: float, n_max: int = 7, phi: float = 0.3) -> int:
    """Patch side for a hint at disparity d; larger disparity => larger patch.

    round(((d - d_min) / (d_max - d_min)) ** (1/phi) * (n_max - 1) + 1),
    bumped to the next odd integer so the patch keeps a center pixel.
    A degenerate range (d_max == d_min) yields 1.
    """
    if d_max <= d_min:
        return 1
    if not (d_min <= d <= d_max):
        raise StereoVpError(f"disparity {d} outside [{d_min}, {d_max}]")
    ratio = (d - d_min) / (d_max - d_min)
    n = iround(ratio ** (1.0 / phi) * (n_max - 1) + 1.0)
    if n % 2 == 0:
        n += 1
    return min(n, n_max)


def adaptive_weight(left: np.ndarray, x: int, y: int, u: int, v: int, sigma_s: float = 2.0, sigma_c: float = 1.0) -> float:
    """Bilateral agreement between a patch pixel (u, v) and its hint (x, y).

    exp(S / (-2 sigma_s^2) + C / (-2 sigma_c^2)) with S the squared spatial
    distance and C the absolute color distance summed over channels, both
    measured on the reference image.
    """
    img = left if left.ndim == 3 else left[:, :, None]
    s = (x - u) ** 2 + (y - v) ** 2
    c = np.abs(img[v, u].astype(np.float64) - img[y, x].astype(np.float64)).sum()
    return math.exp(s / (-2.0 * sigma_s**2) + c / (-2.0 * sigma_c**2))


def _weight_window(left: np.ndarray, x: int, y: int, u0: int, u1: int, v0: int, v1: int, sigma_s: float, sigma_c: float) -> np.ndarray:
    """adaptive_weight evaluated over a clipped window, vectorized."""
    us = np.arange(u0, u1)
    vs = np.arange(v0, v1)
    s = (x - us[None, :]) ** 2 + (y - vs[:, None]) ** 2
    c = np.abs(left[v0:v1, u0:u1].astype(np.float64) - left[y, x].astype(np.float64)).sum(axis=2)
    return np.exp(s / (-2.0 * sigma_s**2) + c / (-2.0 * sigma_c**2))


def _patch_sizes(strategy: str, ds: np.ndarray, n_max: int, phi: float) -> np.ndarray:
    if strategy == "none":
        return np.ones(ds.size, dtype=np.int64)
    if strategy == "fixed" or strategy == "adaptive":
        return np.full(ds.size, n_max, dtype=np.int64)
    d_min, d_max = float(ds.min()), float(ds.max())
    return np.array([distance_patch_size(float(d), d_min, d_max, n_max, phi) for d in ds], dtype=np.int64)


def project_patches(pair: StereoPair, hints, occ: np.ndarray | None, pcfg: PatternConfig, patch: PatchConfig, policy: Policy = Policy.FGD, return_debug: bool = False):
    """Project virtual patterns over per-hint patches onto both images.

    For each usable hint the patch footprint is determined by the strategy
    (a 1x1 point, a fixed square, a distance-scaled square, or an n_max
    square masked by the bilateral weight >= t_w with the center always
    kept). Footprint pixels are claimed with their bilateral weight; each
    image pixel is then patterned by its single winning hint. Occluded
    hints follow the configured policy and hints whose target column falls
    outside the right image project on the left image only.
    """
    policy = Policy(policy)
    height, width, channels = pair.left.data.shape[0], pair.width, pair.channels
    left_orig = pair.left.data
    right_orig = pair.right.data
    alpha = pcfg.alpha

    ys, xs = np.nonzero(hints.valid)
    ds = hints.values[ys, xs]
    occ_flags = occ[ys, xs] if occ is not None else np.zeros(ys.size, dtype=bool)
    sizes = _patch_sizes(patch.strategy, ds, patch.n_max, patch.phi) if ys.size else np.zeros(0, dtype=np.int64)

    left_owner = np.full((height, width), -1, dtype=np.int64)
    left_best = np.zeros((height, width), dtype=np.float64)
    right_owner = np.full((height, width), -1, dtype=np.int64)
    right_best = np.zeros((height, width), dtype=np.float64)

    directives = []
    footprints = []
    for i in range(ys.size):
        x, y, d, n = int(xs[i]), int(ys[i]), float(ds[i]), int(sizes[i])
        src_in = 0 <= iround(x - d) < width
        directive = apply_policy(bool(occ_flags[i]), src_in, policy)
        directives.append(directive)
        if directive is Directive.SKIP:
            footprints.append(None)
            continue
        half = n // 2
        u0, u1 = max(0, x - half), min(width, x + half + 1)
        v0, v1 = max(0, y - half), min(height, y + half + 1)
        wmat = _weight_window(left_orig, x, y, u0, u1, v0, v1, patch.sigma_s, patch.sigma_c)
        inside = np.ones_like(wmat, dtype=bool)
        if patch.strategy == "adaptive":
            inside = wmat >= patch.t_w
            inside[y - v0, x - u0] = True  # center always projected
        footprints.append((u0, u1, v0, v1, wmat, inside))

        # Claim left pixels.
        region_w = np.where(inside, wmat, 0.0)
        better = region_w > left_best[v0:v1, u0:u1]
        left_best[v0:v1, u0:u1] = np.where(better, region_w, left_best[v0:v1, u0:u1])
        left_owner[v0:v1, u0:u1] = np.where(better, i, left_owner[v0:v1, u0:u1])

        # Claim right pixels (pattern lands on both images only on the normal path).
        if directive is Directive.PROJECT_BOTH:
            x_lo = math.floor(u0 - d)
            beta = (u0 - d) - x_lo
            shift = u0 - x_lo  # floor target of column u is u - shift
            offsets = (0, 1) if beta > 0.0 else (0,)
            for off in offsets:
                t0, t1 = u0 - shift + off, u1 - shift + off
                c0, c1 = max(0, t0), min(width, t1)
                if c0 >= c1:
                    continue
                p0, p1 = c0 - t0, c1 - t0  # patch-column span backing these targets
                w_slice = np.where(inside[:, p0:p1], wmat[:, p0:p1], 0.0)
                better = w_slice > right_best[v0:v1, c0:c1]
                right_best[v0:v1, c0:c1] = np.where(better, w_slice, right_best[v0:v1, c0:c1])
                right_owner[v0:v1, c0:c1] = np.where(better, i, right_owner[v0:v1, c0:c1])

    # Commit phase: read snapshots, write winners.
    left_f = left_orig.astype(np.float64)
    right_f = right_orig.astype(np.float64)
    left_planes = [left_orig[:, :, c] for c in range(channels)]
    right_planes = [right_orig[:, :, c] for c in range(channels)]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(pcfg.seed)))

    for i in range(ys.size):
        directive = directives[i]
        if directive is Directive.SKIP:
            continue
        x, y, d, n = int(xs[i]), int(ys[i]), float(ds[i]), int(sizes[i])
        u0, u1, v0, v1, wmat, inside = footprints[i]
        half = n // 2

        # Pattern values for the full patch, per channel; consumption is
        # fixed by (hint, size) alone so borders and ownership cannot
        # perturb the stream.
        if pcfg.kind == "random":
            if patch.uniform_fill:
                pat_full = np.broadcast_to(rng.integers(0, 256, size=channels).astype(np.float64), (n, n, channels))
            else:
                pat_full = rng.integers(0, 256, size=(n, n, channels)).astype(np.float64)
        else:
            pat_full = np.empty((n, n, channels), dtype=np.float64)
            for c in range(channels):
                hist = merged_histogram(left_planes[c], right_planes[c], x, x - d, y, pcfg.search_length, height=2 + n)
                if patch.uniform_fill:
                    pat_full[:, :, c] = select_distinct_value(hist)
                else:
                    hist = hist.copy()
                    for k in range(n * n):
                        val = select_distinct_value(hist)
                        pat_full[k // n, k % n, c] = val
                        hist[val] += 1
        pat = pat_full[v0 - (y - half) : v1 - (y - half), u0 - (x - half) : u1 - (x - half), :]

        own_left = (left_owner[v0:v1, u0:u1] == i) & inside
        if directive is Directive.FGD_COPY:
            src_cols = iround(np.arange(u0, u1, dtype=np.float64) - d)
            src_ok = (src_cols >= 0) & (src_cols < width)
            source = np.where(
                src_ok[None, :, None],
                right_orig[v0:v1][:, np.clip(src_cols, 0, width - 1), :].astype(np.float64),
                pat,
            )
            blended = (1.0 - alpha) * left_f[v0:v1, u0:u1, :] + alpha * source
            left_f[v0:v1, u0:u1, :] = np.where(own_left[:, :, None], blended, left_f[v0:v1, u0:u1, :])
            continue

        blended = (1.0 - alpha) * left_f[v0:v1, u0:u1, :] + alpha * pat
        left_f[v0:v1, u0:u1, :] = np.where(own_left[:, :, None], blended, left_f[v0:v1, u0:u1, :])

        if directive is not Directive.PROJECT_BOTH:
            continue
        x_lo = math.floor(u0 - d)
        beta = (u0 - d) - x_lo
        shift = u0 - x_lo
        # Ceil side first, floor side second: equivalent to processing patch
        # columns left to right with the two splat writes per column.
        sides = []
        if beta > 0.0:
            sides.append((1, alpha * beta))
        sides.append((0, alpha * (1.0 - beta)))
        for off, eff in sides:
            t0, t1 = u0 - shift + off, u1 - shift + off
            c0, c1 = max(0, t0), min(width, t1)
            if c0 >= c1 or eff == 0.0:
                continue
            p0, p1 = c0 - t0, c1 - t0
            own = (right_owner[v0:v1, c0:c1] == i) & inside[:, p0:p1]
            region = right_f[v0:v1, c0:c1, :]
            updated = (1.0 - eff) * region + eff * pat[:, p0:p1, :]
            right_f[v0:v1, c0:c1, :] = np.where(own[:, :, None], updated, region)

    out = StereoPair(Image(quantize_u8(left_f)), Image(quantize_u8(right_f)))
    if return_debug:
        return out, ProjectionDebug(left_owner, right_owner)
    return out
