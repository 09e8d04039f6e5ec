"""Class-pixel statistics over index masks produced by an external segmenter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .color import PixelImage

TAXONOMY = (
    "Background",
    "Human",
    "Door",
    "Wall",
    "Building",
    "Stairs",
    "Sign",
    "Advertisement",
    "Light",
    "Tree",
    "Flower",
    "Plant",
    "Animal",
    "Toy",
    "Food",
    "Drink",
    "Vehicle",
    "Bench",
    "Fence",
    "Fountain",
    "Statue",
    "Vendor",
    "Artwork",
)
N_CLASSES = len(TAXONOMY)
FOREGROUND = TAXONOMY[1:]
DEFAULT_FACADE_CLASSES = ("Wall", "Building")


def class_index(name: str) -> int:
    try:
        return TAXONOMY.index(name)
    except ValueError:
        raise ValueError(f"unknown class {name!r}; expected one of {', '.join(FOREGROUND)}") from None


@dataclass(frozen=True)
class ClassMask:
    """(height, width) array of class indices in [0, 22]."""

    indices: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.indices)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= N_CLASSES):
            raise ValueError(f"mask index out of range 0..{N_CLASSES - 1}: found {arr.min()}..{arr.max()}")
        object.__setattr__(self, "indices", arr.astype(np.uint8))

    @property
    def width(self) -> int:
        return self.indices.shape[1]

    @property
    def height(self) -> int:
        return self.indices.shape[0]

    def counts(self) -> np.ndarray:
        return np.bincount(self.indices.ravel(), minlength=N_CLASSES).astype(np.int64)


@dataclass(frozen=True)
class ClassProportions:
    quarter: str
    counts: np.ndarray  # length 23, index 0 is background

    @property
    def background(self) -> int:
        return int(self.counts[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def foreground_total(self) -> int:
        return int(self.counts[1:].sum())

    @property
    def defined(self) -> bool:
        return self.foreground_total > 0

    def fractions(self) -> np.ndarray | None:
        """Fractions of classes 1..22 over non-background pixels, or None when undefined."""
        if not self.defined:
            return None
        return self.counts[1:] / self.foreground_total

    def fractions_of_total(self) -> np.ndarray:
        return self.counts[1:] / self.total if self.total else np.zeros(N_CLASSES - 1)

    def merge(self, other: "ClassProportions") -> "ClassProportions":
        return ClassProportions(self.quarter, self.counts + other.counts)

    def rows(self) -> list[dict]:
        fr = self.fractions()
        ft = self.fractions_of_total()
        return [
            {
                "quarter": self.quarter,
                "class_index": i + 1,
                "class": name,
                "pixels": int(self.counts[i + 1]),
                "fraction_foreground": None if fr is None else float(fr[i]),
                "fraction_total": float(ft[i]),
            }
            for i, name in enumerate(FOREGROUND)
        ]


@dataclass(frozen=True)
class HeatmapTable:
    quarters: list[str]
    values: np.ndarray  # quarters x 22
    threshold: float = 0.01

    def filtered(self) -> list[dict[str, float]]:
        """Per quarter, the classes whose fraction strictly exceeds the threshold."""
        return [
            {FOREGROUND[j]: float(row[j]) for j in range(len(FOREGROUND)) if row[j] > self.threshold}
            for row in self.values
        ]

    def to_dict(self) -> dict:
        return {
            "quarters": list(self.quarters),
            "classes": list(FOREGROUND),
            "values": self.values.tolist(),
            "threshold": self.threshold,
            "filtered": dict(zip(self.quarters, self.filtered())),
        }


def class_proportions(masks: list[ClassMask], quarter: str = "") -> ClassProportions:
    if not masks:
        raise ValueError("class_proportions needs at least one mask")
    counts = np.zeros(N_CLASSES, dtype=np.int64)
    for m in masks:
        counts += m.counts()
    return ClassProportions(quarter, counts)


def heatmap_table(props: list[ClassProportions], threshold: float = 0.01) -> HeatmapTable:
    if not props:
        raise ValueError("heatmap needs at least one quarter")
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    rows = []
    for p in props:
        fr = p.fractions()
        rows.append(np.zeros(N_CLASSES - 1) if fr is None else fr)
    return HeatmapTable([p.quarter for p in props], np.vstack(rows), threshold)


def facade_pixels(img: PixelImage, mask: ClassMask, facade_classes=DEFAULT_FACADE_CLASSES) -> np.ndarray:
    """HSV pixels (row-major) at mask positions whose class is in ``facade_classes``."""
    if (img.height, img.width) != (mask.height, mask.width):
        raise ValueError(
            f"image is {img.width}x{img.height} but mask is {mask.width}x{mask.height}"
        )
    wanted = [class_index(c) if isinstance(c, str) else int(c) for c in facade_classes]
    keep = np.isin(mask.indices.ravel(), wanted)
    return img.hsv()[keep]
