"""Hue distributions, fitted density curves and KS comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HUE_BINS = 180
DEFAULT_BANDWIDTH = 4.5

# inclusive hue-bin ranges for the photo-vs-street shift report
BANDS = {
    "warm": (0, 30),
    "green": (45, 75),
    "blue": (105, 135),
}


@dataclass(frozen=True)
class HueHistogram:
    bins: np.ndarray
    label: str = ""

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.int64)
        if bins.shape != (HUE_BINS,):
            raise ValueError(f"hue histogram needs {HUE_BINS} bins, got shape {bins.shape}")
        if (bins < 0).any():
            raise ValueError("bin counts must be nonnegative")
        object.__setattr__(self, "bins", bins)

    @property
    def total(self) -> int:
        return int(self.bins.sum())

    def fractions(self) -> np.ndarray:
        return self.bins / self.total

    def __add__(self, other: "HueHistogram") -> "HueHistogram":
        return HueHistogram(self.bins + other.bins, self.label or other.label)


@dataclass(frozen=True)
class FittedCurve:
    samples: np.ndarray
    bandwidth: float

    @property
    def centers(self) -> np.ndarray:
        return np.arange(HUE_BINS) + 0.5


@dataclass(frozen=True)
class KsMatrix:
    labels: list[str]
    values: np.ndarray

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "values": self.values.tolist()}


@dataclass(frozen=True)
class ShiftReport:
    ks: float
    deltas: dict[str, float]
    photo_fractions: dict[str, float]
    street_fractions: dict[str, float]

    @property
    def direction(self) -> dict[str, int]:
        """+1 when the band is heavier in photos, -1 when heavier in street views."""
        return {band: int(np.sign(d)) for band, d in self.deltas.items()}

    def to_dict(self) -> dict:
        return {
            "ks": self.ks,
            "bands": {
                band: {
                    "range": list(BANDS[band]),
                    "photo_fraction": self.photo_fractions[band],
                    "street_fraction": self.street_fractions[band],
                    "delta": self.deltas[band],
                    "direction": self.direction[band],
                }
                for band in BANDS
            },
        }


def hue_bin_indices(hues) -> np.ndarray:
    hues = np.asarray(hues, dtype=np.float64)
    return np.clip(np.floor(hues), 0, HUE_BINS - 1).astype(np.int64)


def build_histogram(pixels, label: str = "") -> HueHistogram:
    """Histogram of hue over 180 unit bins.

    ``pixels`` is an (N, 3) HSV array or a sequence of HsvPixel.
    """
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.size == 0:
        raise ValueError(f"no pixels for hue histogram {label!r}")
    arr = arr.reshape(-1, 3)
    return HueHistogram(np.bincount(hue_bin_indices(arr[:, 0]), minlength=HUE_BINS), label)


def wrapped_gaussian_kernel(bandwidth: float) -> np.ndarray:
    """Kernel weight for each circular bin offset 0..179."""
    offsets = np.arange(HUE_BINS, dtype=np.float64)
    wraps = int(math.ceil(8 * bandwidth / HUE_BINS)) + 1
    kernel = np.zeros(HUE_BINS)
    for m in range(-wraps, wraps + 1):
        kernel += np.exp(-0.5 * ((offsets + m * HUE_BINS) / bandwidth) ** 2)
    return kernel


def fit_curve(hist: HueHistogram, bandwidth: float = DEFAULT_BANDWIDTH) -> FittedCurve:
    """Circular Gaussian KDE over the hue bins, normalized to unit area."""
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    if hist.total <= 0:
        raise ValueError("cannot fit a curve to an empty histogram")
    kernel = wrapped_gaussian_kernel(bandwidth)
    counts = hist.bins.astype(np.float64)
    # Accumulate by offset so every bin sees the same summation order; this
    # keeps the result exactly equivariant under circular rotation.
    acc = np.zeros(HUE_BINS)
    for offset in range(HUE_BINS):
        acc += kernel[offset] * np.roll(counts, offset)
    samples = acc / (float(hist.total) * float(kernel.sum()))
    return FittedCurve(samples, float(bandwidth))


def ks_statistic(a: HueHistogram, b: HueHistogram) -> float:
    """Two-sample KS distance between hue distributions on the linear 0..180 axis."""
    ta, tb = a.total, b.total
    if ta <= 0 or tb <= 0:
        raise ValueError(f"KS needs nonempty histograms ({a.label!r}: {ta}, {b.label!r}: {tb})")
    cdf_a = np.cumsum(a.bins) / ta
    cdf_b = np.cumsum(b.bins) / tb
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_matrix(hists: list[HueHistogram]) -> KsMatrix:
    if len(hists) < 2:
        raise ValueError("a KS matrix needs at least two histograms")
    n = len(hists)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = ks_statistic(hists[i], hists[j])
    return KsMatrix([h.label for h in hists], values)


def band_fraction(hist: HueHistogram, band: tuple[int, int]) -> float:
    lo, hi = band
    return int(hist.bins[lo : hi + 1].sum()) / hist.total


def facade_shift_report(photo: HueHistogram, street: HueHistogram) -> ShiftReport:
    ks = ks_statistic(photo, street)
    pf = {name: band_fraction(photo, rng) for name, rng in BANDS.items()}
    sf = {name: band_fraction(street, rng) for name, rng in BANDS.items()}
    return ShiftReport(ks, {name: pf[name] - sf[name] for name in BANDS}, pf, sf)
