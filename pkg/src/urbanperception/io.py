"""File decoding and report writers."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .color import PixelImage
from .segstat import ClassMask

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
MASK_SUFFIX = ".mask.png"
_ACCEPTED_FORMATS = {"PNG", "JPEG"}


class UnsupportedImageError(ValueError):
    pass


def is_image_file(path: Path) -> bool:
    return path.suffix.lower() in IMAGE_SUFFIXES and not path.name.lower().endswith(MASK_SUFFIX)


def image_size(path) -> tuple[int, int]:
    """(width, height) read from the file header."""
    with Image.open(path) as im:
        return im.size


def load_image(path) -> PixelImage:
    with Image.open(path) as im:
        if im.format not in _ACCEPTED_FORMATS:
            raise UnsupportedImageError(f"{path}: unsupported image format {im.format!r} (PNG and JPEG only)")
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return PixelImage(arr)


def load_mask(path) -> ClassMask:
    with Image.open(path) as im:
        if im.format != "PNG":
            raise UnsupportedImageError(f"{path}: masks must be PNG index rasters")
        if im.mode not in ("L", "P", "I", "I;16"):
            raise UnsupportedImageError(f"{path}: mask must be single-channel, got mode {im.mode}")
        arr = np.asarray(im)
    return ClassMask(arr.astype(np.int64))


def save_mask(mask: ClassMask, path) -> None:
    Image.fromarray(mask.indices, mode="L").save(path, format="PNG")


def swatch_png(swatches: list[tuple[str, float]], width: int = 500, height: int = 60) -> bytes:
    """Horizontal strip of proportional color blocks."""
    strip = np.zeros((height, width, 3), dtype=np.uint8)
    x = 0
    cum = 0.0
    for i, (hex_color, prop) in enumerate(swatches):
        cum += prop
        x_end = width if i == len(swatches) - 1 else int(round(cum * width))
        rgb = [int(hex_color[j : j + 2], 16) for j in (1, 3, 5)]
        strip[:, x:x_end] = rgb
        x = x_end
    buf = io.BytesIO()
    Image.fromarray(strip, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


class ArtifactWriter:
    """Writes report files under one directory and records their digests."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.artifacts: dict[str, dict] = {}

    def write_bytes(self, rel: str, data: bytes) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        self.artifacts[rel] = {"path": rel, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
        return path

    def write_json(self, rel: str, obj) -> Path:
        text = json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
        return self.write_bytes(rel, text.encode("utf-8"))

    def write_csv(self, rel: str, header: list[str], rows) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else v for v in row])
        return self.write_bytes(rel, buf.getvalue().encode("utf-8"))

    def manifest(self) -> list[dict]:
        return [self.artifacts[k] for k in sorted(self.artifacts)]
