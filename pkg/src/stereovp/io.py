"""File I/O for images, disparity maps and hint CSVs.

Supported formats:
  - PFM disparity (little/big endian per the scale-sign header, inf/NaN
    mapped to invalid, rows stored top-down internally)
  - 16-bit PNG disparity, KITTI convention (raw value / 256, 0 = invalid)
  - 8/16-bit PNG and PGM/PPM images (16-bit inputs rescaled to 8-bit)
  - hint CSV: one ``x,y,disparity`` record per line, ``#`` comments

Detection uses the extension plus magic bytes; ambiguous files are
rejected, never guessed.
"""

from __future__ import annotations

import struct
from pathlib import Path

import cv2
import numpy as np

from .core import DisparityMap, HintSet, Image, StereoVpError, iround

__all__ = [
    "FormatError",
    "read_disparity",
    "write_disparity",
    "read_image",
    "write_image",
    "read_hint_csv",
    "write_hint_csv",
]

KITTI_SCALE = 256.0


class FormatError(StereoVpError):
    pass


def _magic(path: Path, n: int = 4) -> bytes:
    with open(path, "rb") as f:
        return f.read(n)


# ---------------------------------------------------------------------------
# PFM

def _read_pfm(path: Path) -> tuple[np.ndarray, float]:
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header == b"Pf":
            channels = 1
        elif header == b"PF":
            channels = 3
        else:
            raise FormatError(f"{path}: not a PFM file (header {header!r})")
        dims = f.readline().decode("ascii", "replace").split()
        if len(dims) != 2:
            raise FormatError(f"{path}: malformed PFM dimension line")
        width, height = int(dims[0]), int(dims[1])
        scale = float(f.readline().decode("ascii", "replace").strip())
        endian = "<" if scale < 0 else ">"
        count = width * height * channels
        payload = f.read(count * 4)
        if len(payload) != count * 4:
            raise FormatError(f"{path}: truncated PFM payload")
        data = np.frombuffer(payload, dtype=endian + "f4").astype(np.float64)
    shape = (height, width) if channels == 1 else (height, width, 3)
    # PFM stores rows bottom-up; flip to the top-down convention.
    return np.flipud(data.reshape(shape)).copy(), abs(scale)


def _write_pfm(path: Path, data: np.ndarray) -> None:
    if data.ndim != 2:
        raise FormatError("only single-channel PFM writing is supported")
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")  # negative scale = little endian
        f.write(np.flipud(data).astype("<f4").tobytes())


# ---------------------------------------------------------------------------
# Disparity maps

def read_disparity(path) -> DisparityMap:
    """Read a disparity map from PFM or 16-bit KITTI PNG."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path}: no such file")
    magic = _magic(path)
    suffix = path.suffix.lower()
    if suffix == ".pfm" and magic[:2] in (b"Pf", b"PF"):
        data, _ = _read_pfm(path)
        if data.ndim != 2:
            raise FormatError(f"{path}: color PFM is not a disparity map")
        valid = np.isfinite(data)
        if valid.any() and data[valid].min() < 0:
            raise FormatError(f"{path}: negative disparities are out of spec for PFM maps")
        vals = np.where(valid, data, 0.0)
        return DisparityMap(vals, valid)
    if suffix == ".png" and magic == b"\x89PNG":
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise FormatError(f"{path}: PNG decode failed")
        if raw.dtype != np.uint16 or raw.ndim != 2:
            raise FormatError(f"{path}: disparity PNG must be 16-bit single-channel")
        valid = raw > 0
        return DisparityMap(raw.astype(np.float64) / KITTI_SCALE, valid)
    raise FormatError(f"{path}: unsupported or ambiguous disparity format")


def write_disparity(disp: DisparityMap, path, kind: str | None = None) -> None:
    """Write a disparity map as PFM or KITTI 16-bit PNG (kind inferred from extension)."""
    path = Path(path)
    kind = kind or {".pfm": "pfm", ".png": "kitti"}.get(path.suffix.lower())
    if kind == "pfm":
        out = np.where(disp.valid, disp.values, np.inf)
        _write_pfm(path, out)
    elif kind == "kitti":
        vals = disp.values[disp.valid]
        if vals.size and (vals.min() < 0 or iround(float(vals.max()) * KITTI_SCALE) > 65535):
            raise FormatError(f"{path}: disparity out of range for 16-bit KITTI PNG")
        raw = iround(disp.values * KITTI_SCALE).astype(np.uint16)
        raw[~disp.valid] = 0
        if not cv2.imwrite(str(path), raw):
            raise FormatError(f"{path}: PNG write failed")
    else:
        raise FormatError(f"{path}: unknown disparity kind {kind!r} (use .pfm or .png)")


# ---------------------------------------------------------------------------
# Images

def read_image(path) -> Image:
    """Read an 8/16-bit PNG or PGM/PPM image; color is returned as RGB."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path}: no such file")
    magic = _magic(path)
    suffix = path.suffix.lower()
    is_png = suffix == ".png" and magic == b"\x89PNG"
    is_pnm = suffix in (".pgm", ".ppm", ".pnm") and magic[:1] == b"P" and magic[1:2] in b"2356"
    if not (is_png or is_pnm):
        raise FormatError(f"{path}: unsupported or ambiguous image format")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise FormatError(f"{path}: image decode failed")
    if raw.ndim == 3:
        if raw.shape[2] == 4:
            raw = cv2.cvtColor(raw, cv2.COLOR_BGRA2BGR)
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    if raw.dtype == np.uint16:
        # 16-bit inputs carry the same content at higher depth; 257 = 65535/255.
        raw = iround(raw.astype(np.float64) / 257.0).astype(np.uint8)
    elif raw.dtype != np.uint8:
        raise FormatError(f"{path}: unsupported image depth {raw.dtype}")
    return Image(raw)


def write_image(img: Image, path) -> None:
    path = Path(path)
    data = img.data[:, :, 0] if img.channels == 1 else cv2.cvtColor(img.data, cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(str(path), data):
        raise FormatError(f"{path}: image write failed")


# ---------------------------------------------------------------------------
# Hint CSV

def read_hint_csv(path, width: int, height: int) -> HintSet:
    """Read ``x,y,disparity`` records; duplicates at one pixel keep the largest value."""
    path = Path(path)
    values = np.zeros((height, width), dtype=np.float64)
    valid = np.zeros((height, width), dtype=bool)
    with open(path, "r", encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 'x,y,disparity', got {line!r}")
            try:
                x, y, d = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: {e}") from e
            if not (0 <= x < width):
                raise FormatError(f"{path}:{lineno}: x={x} out of bounds for width {width}")
            if not (0 <= y < height):
                raise FormatError(f"{path}:{lineno}: y={y} out of bounds for height {height}")
            if not (0 <= d < width):
                raise FormatError(f"{path}:{lineno}: disparity={d} outside [0, width)")
            if not valid[y, x] or d > values[y, x]:
                values[y, x] = d
            valid[y, x] = True
    return HintSet(values, valid)


def write_hint_csv(hints: HintSet, path) -> None:
    path = Path(path)
    ys, xs = np.nonzero(hints.valid)
    with open(path, "w", encoding="ascii") as f:
        f.write("# x,y,disparity\n")
        for y, x in zip(ys.tolist(), xs.tolist()):
            f.write(f"{x},{y},{hints.values[y, x]:.6f}\n")
