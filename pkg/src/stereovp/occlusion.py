"""Occlusion detection for hints warped into the target view, and the
NO / BKGD / FGD projection policies.

A hint visible in the left view may be hidden in the right one; projecting
an identical pattern on both sides there would fabricate a false match.
Hints are warped to an image-like grid W on the right view and a warped
point counts as occluded when a neighbor in a small window carries a
disparity so much larger that it must belong to an occluding surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import HintSet, StereoVpError, iround

__all__ = [
    "OcclusionConfig",
    "Policy",
    "Directive",
    "WarpGrid",
    "warp_hints",
    "classify_occluded",
    "compute_occlusion_mask",
    "apply_policy",
]


class Policy(str, Enum):
    NO = "NO"
    BKGD = "BKGD"
    FGD = "FGD"


class Directive(Enum):
    """What the projector should do for one hint."""

    PROJECT_BOTH = "project_both"  # pattern on both images (normal path)
    SKIP = "skip"  # nothing at all
    FGD_COPY = "fgd_copy"  # copy target content into the reference pixel
    LEFT_ONLY = "left_only"  # pattern on the reference image only


@dataclass(frozen=True)
class OcclusionConfig:
    lam: float = 2.0
    gamma: float = 0.4375
    threshold: float = 1.0
    rx: int = 9
    ry: int = 7
    policy: Policy = Policy.FGD

    def __post_init__(self):
        if self.rx < 1 or self.ry < 1 or self.rx % 2 == 0 or self.ry % 2 == 0:
            raise StereoVpError("occlusion window sides must be odd and >= 1")
        if not (0.0 <= self.gamma <= 1.0):
            raise StereoVpError("gamma must be in [0, 1]")


@dataclass(frozen=True)
class WarpGrid:
    """Hint disparities warped onto the target grid, with bookkeeping.

    ``src_x`` stores, for each occupied cell, the column of the left-grid
    hint that survived the warp (collisions keep the largest disparity and
    overwrite the bookkeeping with it).
    """

    values: np.ndarray  # float64 (H, W)
    valid: np.ndarray  # bool (H, W)
    src_x: np.ndarray  # int64 (H, W), -1 where unoccupied


def warp_hints(hints: HintSet) -> WarpGrid:
    """Warp each hint to W(round(x - d), y) = d, keeping the largest on collision.

    Hints warping out of the grid are excluded (they are the left-border
    cases, handled at projection time).
    """
    h, w = hints.values.shape
    values = np.zeros((h, w), dtype=np.float64)
    valid = np.zeros((h, w), dtype=bool)
    src_x = np.full((h, w), -1, dtype=np.int64)
    ys, xs = np.nonzero(hints.valid)
    ds = hints.values[ys, xs]
    xw = iround(xs.astype(np.float64) - ds)
    inside = (xw >= 0) & (xw < w)
    # Row-major iteration makes the max-disparity collision rule deterministic.
    for y, x, xp, d in zip(ys[inside], xs[inside], xw[inside], ds[inside]):
        if not valid[y, xp] or d > values[y, xp]:
            values[y, xp] = d
            src_x[y, xp] = x
        valid[y, xp] = True
    return WarpGrid(values, valid, src_x)


def classify_occluded(grid: WarpGrid, cfg: OcclusionConfig) -> np.ndarray:
    """Binary occlusion mask on the left grid.

    A warped point (x_o, y_o) is occluded iff some neighbor (x, y) in its
    rx-by-ry window satisfies

        W(x, y) - W(x_o, y_o) - lam * (gamma*|x - x_o| + (1-gamma)*|y - y_o|) > t

    Occluded points are warped back to the hints that produced them.
    """
    vals, occ_cells = grid.values, np.zeros_like(grid.valid)
    h, w = vals.shape
    half_x, half_y = cfg.rx // 2, cfg.ry // 2
    for dy in range(-half_y, half_y + 1):
        for dx in range(-half_x, half_x + 1):
            if dx == 0 and dy == 0:
                continue
            penalty = cfg.lam * (cfg.gamma * abs(dx) + (1.0 - cfg.gamma) * abs(dy))
            # Neighbor value at (x_o + dx, y_o + dy) seen from each cell.
            nb = np.full((h, w), -np.inf)
            ys0, ys1 = max(0, -dy), min(h, h - dy)
            xs0, xs1 = max(0, -dx), min(w, w - dx)
            nb[ys0:ys1, xs0:xs1] = np.where(
                grid.valid[ys0 + dy : ys1 + dy, xs0 + dx : xs1 + dx],
                vals[ys0 + dy : ys1 + dy, xs0 + dx : xs1 + dx],
                -np.inf,
            )
            occ_cells |= grid.valid & (nb - vals - penalty > cfg.threshold)
    mask = np.zeros_like(grid.valid)
    ys, xs = np.nonzero(occ_cells & (grid.src_x >= 0))
    mask[ys, grid.src_x[ys, xs]] = True
    return mask


def compute_occlusion_mask(hints: HintSet, cfg: OcclusionConfig) -> np.ndarray:
    """warp_hints + classify_occluded in one call."""
    return classify_occluded(warp_hints(hints), cfg)


def apply_policy(occluded: bool, target_in_bounds: bool, policy: Policy) -> Directive:
    """Resolve how a hint is projected.

    Non-occluded hints project on both images; when the target column falls
    outside the right image the pattern still goes on the left one.
    Occluded hints follow the active policy: NO skips, BKGD projects anyway
    at background depth, FGD copies the foreground target content into the
    reference pixel (or degenerates to a left-only pattern at the border).
    """
    if not target_in_bounds:
        if occluded and policy is Policy.NO:
            return Directive.SKIP
        return Directive.LEFT_ONLY
    if not occluded:
        return Directive.PROJECT_BOTH
    if policy is Policy.NO:
        return Directive.SKIP
    if policy is Policy.BKGD:
        return Directive.PROJECT_BOTH
    return Directive.FGD_COPY
