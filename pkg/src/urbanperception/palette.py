"""Dominant-color extraction.

Two summaries are produced per image: a k-means palette (default five
colors) and an exact frequency ranking of CCS categories (default top 20).

Clustering runs on a cone embedding of HSV rather than on raw (h, s, v)
so that hues on either side of the red wrap point are close together.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .color import (
    CCS_CODE_COUNT,
    CcsCode,
    HsvPixel,
    PixelImage,
    ccs_index_array,
    ccs_name,
    hsv_to_rgb,
    quantize_to_ccs,
    rgb_hex,
)

log = logging.getLogger(__name__)

MAX_CLUSTER_PIXELS = 250_000
DEFAULT_MAX_ITER = 100
DEFAULT_N_INIT = None  # auto, see auto_n_init
MAX_AUTO_N_INIT = 20
AUTO_N_INIT_BUDGET = 200_000


@dataclass(frozen=True)
class PaletteEntry:
    center: HsvPixel
    proportion: float
    ccs: CcsCode

    @property
    def rgb(self):
        return hsv_to_rgb(self.center)

    @property
    def hex(self) -> str:
        return rgb_hex(self.rgb)

    def to_dict(self) -> dict:
        return {
            "hex": self.hex,
            "proportion": self.proportion,
            "h": self.center.h,
            "s": self.center.s,
            "v": self.center.v,
            "ccs": list(self.ccs),
            "ccs_name": str(ccs_name(self.ccs)),
        }


@dataclass(frozen=True)
class Palette:
    entries: list[PaletteEntry]
    degenerate: bool = False
    inertia: float = 0.0

    def swatches(self) -> list[tuple[str, float]]:
        """(hex color, proportion) pairs, the serialized palette block form."""
        return [(e.hex, e.proportion) for e in self.entries]


@dataclass(frozen=True)
class CcsFrequencyEntry:
    code: CcsCode
    pixel_count: int
    fraction: float

    def to_dict(self) -> dict:
        return {
            "ccs": list(self.code),
            "ccs_name": str(ccs_name(self.code)),
            "hex": rgb_hex(hsv_to_rgb(ccs_center(self.code))),
            "pixel_count": self.pixel_count,
            "fraction": self.fraction,
        }


@dataclass
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int = 0


# ---------------------------------------------------------------------------
# Cone embedding
# ---------------------------------------------------------------------------


def embed_cone_array(hsv) -> np.ndarray:
    hsv = np.asarray(hsv, dtype=np.float64).reshape(-1, 3)
    theta = np.deg2rad(2.0 * hsv[:, 0])
    radius = hsv[:, 1] * hsv[:, 2]
    return np.column_stack([radius * np.cos(theta), radius * np.sin(theta), hsv[:, 2]])


def embed_cone(p) -> tuple[float, float, float]:
    x, y, z = embed_cone_array([tuple(p)])[0]
    return float(x), float(y), float(z)


def cone_to_hsv(point) -> HsvPixel:
    x, y, z = (float(c) for c in point)
    radius = float(np.hypot(x, y))
    if z <= 0.0 or radius == 0.0:
        return HsvPixel(0.0, 0.0, min(max(z, 0.0), 1.0))
    h = (np.degrees(np.arctan2(y, x)) / 2.0) % 180.0
    if h >= 180.0:
        h = 0.0
    return HsvPixel(float(h), min(radius / z, 1.0), min(z, 1.0))


def ccs_center(code: CcsCode) -> HsvPixel:
    """Midpoint of a CCS cell in HSV, used for swatch rendering."""
    return HsvPixel((code.hue_level + 0.5) * 4.5, (code.sat_level + 0.5) / 5, (code.val_level + 0.5) / 5)


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(n, k) squared distances, accumulated coordinate by coordinate."""
    out = np.empty((len(centers), len(points)))
    tmp = np.empty(len(points))
    for j, c in enumerate(centers):
        row = out[j]
        np.subtract(points[:, 0], c[0], out=tmp)
        np.multiply(tmp, tmp, out=row)
        for d in range(1, points.shape[1]):
            np.subtract(points[:, d], c[d], out=tmp)
            tmp *= tmp
            row += tmp
    return out.T


def auto_n_init(n_points: int) -> int:
    """Restart count: 20 for small point sets, fewer as the set grows."""
    return int(min(MAX_AUTO_N_INIT, max(1, AUTO_N_INIT_BUDGET // max(n_points, 1))))


def kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator, weights: np.ndarray) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    first = int(np.searchsorted(np.cumsum(weights), rng.random() * weights.sum(), side="right"))
    centers[0] = points[min(first, n - 1)]
    closest = _sq_dists(points, centers[:1])[:, 0]
    for j in range(1, k):
        potential = np.cumsum(closest * weights)
        if potential[-1] <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(potential, rng.random() * potential[-1], side="right"))
            idx = min(idx, n - 1)
        centers[j] = points[idx]
        closest = np.minimum(closest, _sq_dists(points, centers[j : j + 1])[:, 0])
    return centers


def _update_centers(points, weights, labels, centers, k):
    mass = np.bincount(labels, weights=weights, minlength=k)
    new = np.empty_like(centers)
    for d in range(points.shape[1]):
        new[:, d] = np.bincount(labels, weights=points[:, d] * weights, minlength=k)
    filled = mass > 0
    new[filled] /= mass[filled, None]
    for j in np.flatnonzero(~filled):
        # empty cluster: take over the point farthest from its own center
        resid = points - new[labels]
        far = int(np.argmax(np.einsum("nd,nd->n", resid, resid)))
        new[j] = points[far]
        labels[far] = j
    return new


def _inertia(points, weights, labels, centers) -> float:
    resid = points - centers[labels]
    return float(np.dot(weights, np.einsum("nd,nd->n", resid, resid)))


def lloyd(points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = DEFAULT_MAX_ITER,
          weights: np.ndarray | None = None) -> KMeansResult:
    """Single weighted Lloyd run from a k-means++ start.

    Stops when no assignment changes or after ``max_iter`` updates.
    """
    if weights is None:
        weights = np.ones(len(points))
    centers = kmeans_pp_init(points, k, rng, weights)
    labels = np.argmin(_sq_dists(points, centers), axis=1)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        centers = _update_centers(points, weights, labels.copy(), centers, k)
        new_labels = np.argmin(_sq_dists(points, centers), axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    else:
        centers = _update_centers(points, weights, labels.copy(), centers, k)
    return KMeansResult(centers, labels, _inertia(points, weights, labels, centers), n_iter)


def kmeans(points, k: int, seed: int, max_iter: int = DEFAULT_MAX_ITER, n_init: int | None = DEFAULT_N_INIT,
           weights=None) -> KMeansResult:
    """Best-of-``n_init`` Lloyd clustering with k-means++ seeding.

    ``weights`` act as point multiplicities, so clustering the distinct
    colors of an image with their pixel counts is equivalent to clustering
    every pixel. ``n_init=None`` picks the restart count from the number of
    points.
    """
    points = np.asarray(points, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(points) < k:
        raise ValueError(f"need at least {k} points, got {len(points)}")
    weights = np.ones(len(points)) if weights is None else np.asarray(weights, dtype=np.float64)
    if n_init is None:
        n_init = auto_n_init(len(points))
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        res = lloyd(points, k, rng, max_iter, weights)
        if best is None or res.inertia < best.inertia:
            best = res
    return best


def _palette_entries(centers, counts, total) -> list[PaletteEntry]:
    entries = []
    for center, count in zip(centers, counts):
        hsv = cone_to_hsv(center)
        entries.append(PaletteEntry(hsv, float(count) / total, quantize_to_ccs(hsv)))
    # stable sort keeps cluster order on ties
    order = sorted(range(len(entries)), key=lambda i: -entries[i].proportion)
    return [entries[i] for i in order]


def palette_from_hsv(
    hsv,
    k: int = 5,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    n_init: int | None = DEFAULT_N_INIT,
    max_pixels: int = MAX_CLUSTER_PIXELS,
) -> Palette:
    hsv = np.asarray(hsv, dtype=np.float64).reshape(-1, 3)
    if len(hsv) == 0:
        raise ValueError("cannot build a palette from an empty image")
    if k < 1:
        raise ValueError("k must be at least 1")
    points = embed_cone_array(hsv)
    if len(points) > max_pixels:
        pick = np.random.default_rng(seed).choice(len(points), size=max_pixels, replace=False)
        points = points[np.sort(pick)]

    distinct, counts = np.unique(points, axis=0, return_counts=True)
    if len(distinct) < k:
        log.debug("only %d distinct colors for k=%d; returning degenerate palette", len(distinct), k)
        return Palette(_palette_entries(distinct, counts, len(points)), degenerate=True)

    res = kmeans(distinct, k, seed, max_iter=max_iter, n_init=n_init, weights=counts)
    sizes = np.bincount(res.labels, weights=counts, minlength=k)
    return Palette(_palette_entries(res.centers, sizes, len(points)), inertia=res.inertia)


def kmeans_palette(img: PixelImage, k: int = 5, seed: int = 0, **kwargs) -> Palette:
    return palette_from_hsv(img.hsv(), k=k, seed=seed, **kwargs)


# ---------------------------------------------------------------------------
# CCS frequency summary
# ---------------------------------------------------------------------------


def ccs_counts(hsv) -> np.ndarray:
    """Exact pixel counts for all 1000 CCS codes, indexed by CcsCode.index."""
    return np.bincount(ccs_index_array(hsv), minlength=CCS_CODE_COUNT)


def top_n_from_counts(counts, n: int = 20) -> list[CcsFrequencyEntry]:
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        raise ValueError("no pixels to rank")
    if n < 1:
        raise ValueError("n must be at least 1")
    # count descending, then code index ascending
    order = np.lexsort((np.arange(len(counts)), -counts))
    out = []
    for idx in order[:n]:
        if counts[idx] == 0:
            break
        out.append(CcsFrequencyEntry(CcsCode.from_index(int(idx)), int(counts[idx]), int(counts[idx]) / total))
    return out


def ccs_top_n(img: PixelImage, n: int = 20) -> list[CcsFrequencyEntry]:
    return top_n_from_counts(ccs_counts(img.hsv()), n)
