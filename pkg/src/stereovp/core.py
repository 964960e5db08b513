"""Shared geometry, image and map types plus depth/disparity conversion.

All container types are immutable after construction (their numpy buffers
are marked read-only) so they can be shared freely across workers. Image
arithmetic during patterning runs in float64 and is re-quantized to 8-bit
once, at write-out, with round-half-away-from-zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StereoVpError",
    "InvalidDepthError",
    "InvalidDisparityError",
    "DimensionMismatchError",
    "Image",
    "StereoPair",
    "Calibration",
    "DisparityMap",
    "HintSet",
    "iround",
    "quantize_u8",
    "depth_to_disparity",
    "disparity_to_depth",
    "corresponding_point",
]


class StereoVpError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDepthError(StereoVpError):
    pass


class InvalidDisparityError(StereoVpError):
    pass


class DimensionMismatchError(StereoVpError):
    pass


def iround(x):
    """Round half up (scalar or array).

    Identical to round-half-away-from-zero on the non-negative domain this
    package works in. Used everywhere a real coordinate or intensity is
    snapped to a grid so results do not depend on banker's rounding.
    """
    if isinstance(x, np.ndarray):
        return np.floor(x + 0.5).astype(np.int64)
    return int(np.floor(x + 0.5))


def quantize_u8(a: np.ndarray) -> np.ndarray:
    """Quantize real-valued intensities to uint8, rounding half away from zero."""
    return np.clip(np.floor(np.asarray(a, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Image:
    """8-bit image, stored as (height, width, channels) with channels 1 or 3."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3 or a.shape[2] not in (1, 3):
            raise StereoVpError(f"image must be HxW or HxWxC with C in (1, 3), got shape {a.shape}")
        if a.dtype != np.uint8:
            if not (np.issubdtype(a.dtype, np.integer) and a.min() >= 0 and a.max() <= 255):
                raise StereoVpError("image data must be 8-bit values in [0, 255]")
            a = a.astype(np.uint8)
        object.__setattr__(self, "data", _freeze(a))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def as_float(self) -> np.ndarray:
        """Writable float64 copy, for blending/splatting."""
        return self.data.astype(np.float64)

    def to_gray(self) -> np.ndarray:
        """(H, W) uint8 by integer-rounded average of channels."""
        if self.channels == 1:
            return self.data[:, :, 0]
        return quantize_u8(self.data.astype(np.float64).mean(axis=2))


@dataclass(frozen=True)
class StereoPair:
    """Rectified image pair; left and right share geometry and channel count."""

    left: Image
    right: Image

    def __post_init__(self):
        l, r = self.left, self.right
        if (l.width, l.height, l.channels) != (r.width, r.height, r.channels):
            raise DimensionMismatchError(
                f"stereo pair dimensions differ: left {l.width}x{l.height}x{l.channels}, "
                f"right {r.width}x{r.height}x{r.channels}"
            )

    @property
    def width(self) -> int:
        return self.left.width

    @property
    def height(self) -> int:
        return self.left.height

    @property
    def channels(self) -> int:
        return self.left.channels


@dataclass(frozen=True)
class Calibration:
    """Stereo geometry: focal length in pixels and baseline in meters."""

    focal_px: float
    baseline_m: float

    def __post_init__(self):
        if not (self.focal_px > 0 and self.baseline_m > 0):
            raise StereoVpError("focal_px and baseline_m must both be positive")


@dataclass(frozen=True)
class DisparityMap:
    """Dense per-pixel disparity with an explicit validity plane.

    Valid pixels carry finite values >= 0; invalid pixels are excluded from
    every metric and every projection. File sentinels (0 in KITTI PNG, inf
    in PFM) are mapped onto the validity plane by the io module.
    """

    values: np.ndarray
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise StereoVpError(f"disparity values must be 2-D, got shape {v.shape}")
        m = self.valid
        if m is None:
            m = np.isfinite(v)
        m = np.asarray(m, dtype=bool)
        if m.shape != v.shape:
            raise DimensionMismatchError(f"validity plane shape {m.shape} != values shape {v.shape}")
        ok = v[m]
        if ok.size and (not np.all(np.isfinite(ok)) or ok.min() < 0):
            raise InvalidDisparityError("valid pixels must carry finite disparities >= 0")
        object.__setattr__(self, "values", _freeze(v))
        object.__setattr__(self, "valid", _freeze(m))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def num_valid(self) -> int:
        return int(self.valid.sum())


class HintSet(DisparityMap):
    """Sparse disparity hints on the left image grid.

    Same layout as DisparityMap; additionally every valid hint must satisfy
    0 <= d < width.
    """

    def __post_init__(self):
        super().__post_init__()
        vals = self.values[self.valid]
        if vals.size and vals.max() >= self.width:
            raise InvalidDisparityError("hint disparities must satisfy 0 <= d < image width")

    @property
    def density(self) -> float:
        return float(self.valid.sum()) / (self.width * self.height)


def depth_to_disparity(z: float, cal: Calibration) -> float:
    """d = baseline * focal / z. Strictly decreasing in z."""
    if z <= 0:
        raise InvalidDepthError(f"depth must be positive, got {z}")
    return cal.baseline_m * cal.focal_px / z


def disparity_to_depth(d: float, cal: Calibration) -> float:
    """Inverse of depth_to_disparity."""
    if d <= 0:
        raise InvalidDisparityError(f"disparity must be positive, got {d}")
    return cal.baseline_m * cal.focal_px / d


def corresponding_point(x: float, y: float, d: float) -> float:
    """Column of the corresponding point in the target view: x' = x - d.

    May be negative (left-border case); callers decide how to handle it.
    """
    if d < 0:
        raise InvalidDisparityError(f"disparity must be >= 0, got {d}")
    return x - d
