"""Generate, perturb, ingest and analyze sparse disparity hints."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import io as vio
from .core import Calibration, DimensionMismatchError, DisparityMap, HintSet, StereoVpError

__all__ = [
    "SamplingConfig",
    "NoiseConfig",
    "HintStats",
    "EmptyGroundTruthError",
    "sample_from_gt",
    "apply_sensor_noise",
    "load_sparse_hints",
    "analyze_hints",
]


class EmptyGroundTruthError(StereoVpError):
    pass


@dataclass(frozen=True)
class SamplingConfig:
    """Uniform sampling of ground-truth pixels (default 5%)."""

    density: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.density <= 1):
            raise StereoVpError(f"density must be in (0, 1], got {self.density}")


@dataclass(frozen=True)
class NoiseConfig:
    """Quadratic depth-noise model: sigma(z) = k * z^2.

    The default coefficient matches the quadratic term of the Kinect noise
    model commonly used to simulate consumer depth sensors.
    """

    k: float = 0.0019
    seed: int = 0

    def __post_init__(self):
        if self.k < 0:
            raise StereoVpError(f"noise coefficient must be >= 0, got {self.k}")


@dataclass(frozen=True)
class HintStats:
    density: float
    mae_vs_gt: float
    histogram_counts: np.ndarray
    histogram_edges: np.ndarray


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def sample_from_gt(gt: DisparityMap, cfg: SamplingConfig) -> HintSet:
    """Sample round(density * #valid) ground-truth pixels uniformly, without replacement.

    Values are copied verbatim from GT; the result is deterministic for a
    fixed seed.
    """
    ys, xs = np.nonzero(gt.valid)
    n_valid = ys.size
    if n_valid == 0:
        raise EmptyGroundTruthError("ground truth has no valid pixels to sample from")
    count = int(np.floor(cfg.density * n_valid + 0.5))
    pick = _rng(cfg.seed).choice(n_valid, size=count, replace=False)
    valid = np.zeros_like(gt.valid)
    values = np.zeros_like(gt.values)
    valid[ys[pick], xs[pick]] = True
    values[ys[pick], xs[pick]] = gt.values[ys[pick], xs[pick]]
    return HintSet(values, valid)


def apply_sensor_noise(hints: HintSet, cal: Calibration, cfg: NoiseConfig) -> HintSet:
    """Perturb each hint's depth with zero-mean Gaussian noise of std k * z^2.

    Noise is applied in depth space (then converted back to disparity);
    hints whose perturbed depth drops to <= 0 become invalid. k = 0 returns
    the input unchanged.
    """
    if cfg.k == 0:
        return hints
    ys, xs = np.nonzero(hints.valid)
    d = hints.values[ys, xs]
    if np.any(d <= 0):
        raise StereoVpError("all hints must be convertible to positive depth (d > 0)")
    bf = cal.baseline_m * cal.focal_px
    z = bf / d
    z_noisy = z + cfg.k * z**2 * _rng(cfg.seed).standard_normal(z.size)
    keep = z_noisy > 0
    values = np.zeros_like(hints.values)
    valid = np.zeros_like(hints.valid)
    valid[ys[keep], xs[keep]] = True
    values[ys[keep], xs[keep]] = bf / z_noisy[keep]
    return HintSet(values, valid)


def load_sparse_hints(path, width: int | None = None, height: int | None = None) -> HintSet:
    """Load hints from a CSV file or any supported disparity-map format.

    CSV needs the target grid size (the format does not carry one); for map
    formats the given size, if any, is checked against the file.
    """
    p = str(path)
    if p.lower().endswith(".csv"):
        if width is None or height is None:
            raise StereoVpError("loading CSV hints requires explicit width and height")
        return vio.read_hint_csv(p, width, height)
    disp = vio.read_disparity(p)
    if width is not None and (disp.width, disp.height) != (width, height):
        raise DimensionMismatchError(
            f"{p}: hint grid is {disp.width}x{disp.height}, expected {width}x{height}"
        )
    return HintSet(disp.values, disp.valid)


def analyze_hints(hints: HintSet, gt: DisparityMap, bins: int = 32) -> HintStats:
    """Density, MAE against GT (over pixels valid in both) and a disparity histogram.

    The histogram uses equal-width bins spanning [0, max hint]; the last bin
    is max-inclusive.
    """
    if (hints.width, hints.height) != (gt.width, gt.height):
        raise DimensionMismatchError("hints and ground truth must share dimensions")
    both = hints.valid & gt.valid
    mae = float(np.abs(hints.values[both] - gt.values[both]).mean()) if both.any() else 0.0
    vals = hints.values[hints.valid]
    top = float(vals.max()) if vals.size else 0.0
    if top == 0.0:
        top = 1.0  # degenerate range: everything lands in the first bin
    counts, edges = np.histogram(vals, bins=bins, range=(0.0, top))
    return HintStats(
        density=hints.density,
        mae_vs_gt=mae,
        histogram_counts=counts,
        histogram_edges=edges,
    )
