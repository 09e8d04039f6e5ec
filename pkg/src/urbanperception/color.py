"""Pixel-level color primitives.

Hue is expressed on a half-degree scale throughout the package: the full
color circle maps to [0, 180), so green sits at 60 and blue at 120.
Saturation and value are in [0, 1].

The Chinese color system (CCS) used for classification has 40 hue levels
(ten basic hues, each split into four sub-hues) and five levels each for
saturation and value, 1000 categories in total.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

HUE_SCALE = 180.0
CCS_HUE_LEVELS = 40
CCS_SV_LEVELS = 5
CCS_HUE_WIDTH = HUE_SCALE / CCS_HUE_LEVELS  # 4.5
CCS_CODE_COUNT = CCS_HUE_LEVELS * CCS_SV_LEVELS * CCS_SV_LEVELS

BASIC_HUES = ("R", "YR", "Y", "GY", "G", "BG", "B", "PB", "P", "RP")


class RgbPixel(NamedTuple):
    r: int
    g: int
    b: int


class HsvPixel(NamedTuple):
    h: float
    s: float
    v: float


class CcsCode(NamedTuple):
    hue_level: int
    sat_level: int
    val_level: int

    @property
    def index(self) -> int:
        """Flat index in [0, 1000), ordered by (hue, sat, val)."""
        return (self.hue_level * CCS_SV_LEVELS + self.sat_level) * CCS_SV_LEVELS + self.val_level

    @classmethod
    def from_index(cls, index: int) -> "CcsCode":
        if not 0 <= index < CCS_CODE_COUNT:
            raise ValueError(f"CCS index out of range: {index}")
        hue, rest = divmod(int(index), CCS_SV_LEVELS * CCS_SV_LEVELS)
        sat, val = divmod(rest, CCS_SV_LEVELS)
        return cls(hue, sat, val)


@dataclass(frozen=True)
class CcsName:
    basic_hue: str
    sub_index: int
    sat_level: int
    val_level: int

    def __str__(self) -> str:
        return f"{self.sub_index + 1}{self.basic_hue}-S{self.sat_level}-V{self.val_level}"


@dataclass(frozen=True)
class PixelImage:
    """Decoded raster. ``data`` is a (height, width, 3) uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must have at least one pixel")
        if arr.dtype != np.uint8:
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("channel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_pixels(cls, width: int, height: int, pixels) -> "PixelImage":
        arr = np.asarray(pixels, dtype=np.int64).reshape(-1, 3)
        if arr.shape[0] != width * height:
            raise ValueError(f"{arr.shape[0]} pixels given for a {width}x{height} image")
        return cls(arr.reshape(height, width, 3))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def rgb(self) -> np.ndarray:
        """Row-major (N, 3) uint8 view of the pixels."""
        return self.data.reshape(-1, 3)

    def hsv(self) -> np.ndarray:
        return rgb_to_hsv_array(self.rgb())


# ---------------------------------------------------------------------------
# RGB <-> HSV
# ---------------------------------------------------------------------------


def rgb_to_hsv_array(rgb) -> np.ndarray:
    """Vectorized hexcone RGB -> HSV for an (N, 3) array of 0-255 values."""
    rgb = np.asarray(rgb, dtype=np.float64).reshape(-1, 3) / 255.0
    r, g, b = rgb[:, 0], rgb[:, 1], rgb[:, 2]
    maxc = rgb.max(axis=1)
    minc = rgb.min(axis=1)
    delta = maxc - minc
    chromatic = delta > 0

    safe = np.where(chromatic, delta, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    sector = np.where(r == maxc, bc - gc, np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(chromatic, (sector / 6.0) % 1.0, 0.0) * HUE_SCALE
    # (x % 1.0) can round up to exactly 1.0 for tiny negative x
    h = np.where(h >= HUE_SCALE, 0.0, h)

    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    return np.column_stack([h, s, maxc])


def hsv_to_rgb_array(hsv) -> np.ndarray:
    """Vectorized inverse of :func:`rgb_to_hsv_array`, rounded to uint8."""
    hsv = np.asarray(hsv, dtype=np.float64).reshape(-1, 3)
    h = (hsv[:, 0] / HUE_SCALE) % 1.0 * 6.0
    s, v = hsv[:, 1], hsv[:, 2]
    i = np.floor(h).astype(np.int64) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices = [
        np.column_stack([v, t, p]),
        np.column_stack([q, v, p]),
        np.column_stack([p, v, t]),
        np.column_stack([p, q, v]),
        np.column_stack([t, p, v]),
        np.column_stack([v, p, q]),
    ]
    out = np.select([(i == k)[:, None] for k in range(6)], choices)
    return np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)


# Scalar forms use colorsys, which implements the same hexcone formulas;
# numpy round-trips are far too slow for per-pixel calls.


def rgb_to_hsv(p) -> HsvPixel:
    r, g, b = (float(c) / 255.0 for c in p)
    h, s, v = colorsys.rgb_to_hsv(r, g, b)
    h *= HUE_SCALE
    return HsvPixel(0.0 if h >= HUE_SCALE else h, s, v)


def hsv_to_rgb(p) -> RgbPixel:
    h, s, v = (float(c) for c in p)
    rgb = colorsys.hsv_to_rgb((h / HUE_SCALE) % 1.0, s, v)
    return RgbPixel(*(min(255, max(0, round(c * 255.0))) for c in rgb))


def rgb_hex(p) -> str:
    r, g, b = (int(c) for c in p)
    return f"#{r:02x}{g:02x}{b:02x}"


# ---------------------------------------------------------------------------
# White balance
# ---------------------------------------------------------------------------


def gray_world_gains(img: PixelImage) -> np.ndarray:
    """Per-channel Gray World gains; a zero-mean channel keeps gain 1."""
    means = img.rgb().astype(np.float64).mean(axis=0)
    target = means.mean()
    gains = np.ones(3)
    nonzero = means > 0
    gains[nonzero] = target / means[nonzero]
    return gains


def gray_world_correct(img: PixelImage) -> PixelImage:
    gains = gray_world_gains(img)
    if np.all(gains == 1.0):
        return PixelImage(img.data.copy())
    out = np.rint(img.data.astype(np.float64) * gains)
    return PixelImage(np.clip(out, 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# Chinese color system
# ---------------------------------------------------------------------------


def quantize_hsv_array(hsv) -> np.ndarray:
    """Map an (N, 3) HSV array to an (N, 3) int array of CCS levels."""
    hsv = np.asarray(hsv, dtype=np.float64).reshape(-1, 3)
    hue = np.clip(np.floor(hsv[:, 0] / CCS_HUE_WIDTH), 0, CCS_HUE_LEVELS - 1)
    sat = np.clip(np.floor(hsv[:, 1] * CCS_SV_LEVELS), 0, CCS_SV_LEVELS - 1)
    val = np.clip(np.floor(hsv[:, 2] * CCS_SV_LEVELS), 0, CCS_SV_LEVELS - 1)
    return np.column_stack([hue, sat, val]).astype(np.int64)


def ccs_index_array(hsv) -> np.ndarray:
    levels = quantize_hsv_array(hsv)
    return (levels[:, 0] * CCS_SV_LEVELS + levels[:, 1]) * CCS_SV_LEVELS + levels[:, 2]


def quantize_to_ccs(p) -> CcsCode:
    hue, sat, val = quantize_hsv_array([tuple(p)])[0]
    return CcsCode(int(hue), int(sat), int(val))


def ccs_name(code: CcsCode) -> CcsName:
    basic, sub = divmod(code.hue_level, 4)
    return CcsName(BASIC_HUES[basic], sub, code.sat_level, code.val_level)


def ccs_code(name: CcsName) -> CcsCode:
    """Inverse of :func:`ccs_name`."""
    hue_level = 4 * BASIC_HUES.index(name.basic_hue) + name.sub_index
    return CcsCode(hue_level, name.sat_level, name.val_level)
