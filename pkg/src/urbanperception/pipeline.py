"""Dataset discovery, run configuration and report generation.

Expected layout::

    root/
      <quarter>/
        photos/        social-media photos (PNG/JPEG)
        streetviews/   street-view images (optional)
        masks/         <stem>.mask.png index rasters (optional)
        reviews.jsonl  {"id", "quarter", "text"} records (optional)
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .color import ccs_name, gray_world_correct
from .diststat import (
    HUE_BINS,
    FittedCurve,
    HueHistogram,
    KsMatrix,
    ShiftReport,
    facade_shift_report,
    fit_curve,
    hue_bin_indices,
    ks_matrix,
)
from .io import MASK_SUFFIX, ArtifactWriter, image_size, is_image_file, load_image, load_mask, swatch_png
from .palette import DEFAULT_MAX_ITER, DEFAULT_N_INIT, CcsFrequencyEntry, Palette, ccs_counts, palette_from_hsv, top_n_from_counts
from .segstat import (
    DEFAULT_FACADE_CLASSES,
    FOREGROUND,
    ClassProportions,
    HeatmapTable,
    class_index,
    heatmap_table,
)
from .sentiment import DIMENSIONS, BatchResult, LexiconSet, demo_lexicon, load_reviews, score_batch

log = logging.getLogger(__name__)

ANALYSES = ("palette", "histogram", "ks", "segstat", "facade", "sentiment")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_WARNINGS = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    analyses: tuple[str, ...] = ANALYSES
    k: int = 5
    top_n: int = 20
    bandwidth: float = 4.5
    heatmap_threshold: float = 0.01
    facade_classes: tuple[str, ...] = DEFAULT_FACADE_CLASSES
    seed: int = 0
    white_balance_photos: bool = True
    white_balance_streetviews: bool = True
    lexicon: str | None = None
    workers: int = 1
    kmeans_max_iter: int = DEFAULT_MAX_ITER
    kmeans_n_init: int | None = DEFAULT_N_INIT

    def __post_init__(self):
        self.analyses = tuple(self.analyses)
        self.facade_classes = tuple(self.facade_classes)
        self.validate()

    def validate(self) -> None:
        unknown = [a for a in self.analyses if a not in ANALYSES]
        if unknown:
            raise ConfigError(f"unknown analyses {unknown}; choose from {ANALYSES}")
        if not self.analyses:
            raise ConfigError("no analyses enabled")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.top_n < 1:
            raise ConfigError("top_n must be >= 1")
        if not self.bandwidth > 0:
            raise ConfigError("bandwidth must be > 0")
        if not 0 < self.heatmap_threshold < 1:
            raise ConfigError("heatmap_threshold must lie in (0, 1)")
        if not self.facade_classes:
            raise ConfigError("facade_classes must name at least one class")
        for c in self.facade_classes:
            try:
                class_index(c)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.kmeans_max_iter < 1 or (self.kmeans_n_init is not None and self.kmeans_n_init < 1):
            raise ConfigError("kmeans_max_iter and kmeans_n_init must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        wb = data.pop("white_balance", None)
        if isinstance(wb, bool):
            data.setdefault("white_balance_photos", wb)
            data.setdefault("white_balance_streetviews", wb)
        elif isinstance(wb, dict):
            data.setdefault("white_balance_photos", bool(wb.get("photos", True)))
            data.setdefault("white_balance_streetviews", bool(wb.get("streetviews", True)))
        elif wb is not None:
            raise ConfigError("white_balance must be a boolean or {photos, streetviews}")
        known = set(cls.__dataclass_fields__)
        extra = sorted(set(data) - known)
        if extra:
            raise ConfigError(f"unknown config keys: {extra}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["analyses"] = list(self.analyses)
        d["facade_classes"] = list(self.facade_classes)
        return d


# ---------------------------------------------------------------------------
# Discovery
# ---------------------------------------------------------------------------


@dataclass
class QuarterLayout:
    name: str
    path: Path
    photos: list[Path] = field(default_factory=list)
    streetviews: list[Path] = field(default_factory=list)
    masks: dict[Path, Path] = field(default_factory=dict)
    reviews: Path | None = None

    def inventory(self) -> dict:
        return {
            "photos": len(self.photos),
            "streetviews": len(self.streetviews),
            "masks": len(self.masks),
            "reviews": self.reviews is not None,
        }


@dataclass
class DatasetLayout:
    root: Path
    quarters: list[QuarterLayout]
    warnings: list[str] = field(default_factory=list)


def _list_images(folder: Path, warnings: list[str]) -> list[Path]:
    if not folder.is_dir():
        return []
    out = []
    for p in sorted(folder.iterdir()):
        if not p.is_file() or p.name.startswith("."):
            continue
        if is_image_file(p):
            out.append(p)
        else:
            warnings.append(f"{p}: skipped, only PNG and JPEG images are supported")
    return out


def discover(root) -> DatasetLayout:
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root not found: {root}")
    warnings: list[str] = []
    quarters = []
    for qdir in sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith(".")):
        q = QuarterLayout(qdir.name, qdir)
        q.photos = _list_images(qdir / "photos", warnings)
        q.streetviews = _list_images(qdir / "streetviews", warnings)
        reviews = qdir / "reviews.jsonl"
        q.reviews = reviews if reviews.is_file() else None

        by_stem: dict[str, list[Path]] = {}
        for img in q.photos + q.streetviews:
            by_stem.setdefault(img.stem, []).append(img)
        mask_dir = qdir / "masks"
        if mask_dir.is_dir():
            for m in sorted(mask_dir.iterdir()):
                if not m.name.lower().endswith(MASK_SUFFIX):
                    continue
                stem = m.name[: -len(MASK_SUFFIX)]
                candidates = by_stem.get(stem, [])
                if not candidates:
                    warnings.append(f"{m}: orphan mask, no image with stem {stem!r}")
                    continue
                if len(candidates) > 1:
                    warnings.append(f"{m}: stem {stem!r} matches several images; pairing with {candidates[0]}")
                img = candidates[0]
                try:
                    isize, msize = image_size(img), image_size(m)
                except OSError as exc:
                    warnings.append(f"{m}: unreadable ({exc})")
                    continue
                if isize != msize:
                    warnings.append(
                        f"{m} ({msize[0]}x{msize[1]}) does not match {img} ({isize[0]}x{isize[1]}); pair excluded"
                    )
                    continue
                q.masks[img] = m

        if not (q.photos or q.streetviews or q.reviews):
            warnings.append(f"quarter {q.name!r} has no readable inputs; skipped")
            continue
        quarters.append(q)
    if not quarters:
        warnings.append(f"no quarters found under {root}")
    for w in warnings:
        log.warning(w)
    return DatasetLayout(root, quarters, warnings)


# ---------------------------------------------------------------------------
# Run
# ---------------------------------------------------------------------------


@dataclass
class ImageResult:
    path: Path
    width: int
    height: int
    palette: Palette | None = None
    top_ccs: list[CcsFrequencyEntry] | None = None
    hue_counts: np.ndarray | None = None
    facade_counts: np.ndarray | None = None
    class_counts: np.ndarray | None = None


@dataclass
class QuarterReport:
    name: str
    images: list[ImageResult] = field(default_factory=list)
    photo_hist: HueHistogram | None = None
    photo_curve: FittedCurve | None = None
    street_hist: HueHistogram | None = None
    street_curve: FittedCurve | None = None
    proportions: ClassProportions | None = None
    facade_photo: HueHistogram | None = None
    facade_street: HueHistogram | None = None
    shift: ShiftReport | None = None
    sentiment: BatchResult | None = None
    notes: list[str] = field(default_factory=list)


@dataclass
class RunResult:
    reports: list[QuarterReport]
    ks: KsMatrix | None
    heatmap: HeatmapTable | None
    warnings: list[str]
    exit_code: int
    out_dir: Path | None = None


def _hue_counts(hsv: np.ndarray) -> np.ndarray:
    return np.bincount(hue_bin_indices(hsv[:, 0]), minlength=HUE_BINS).astype(np.int64)


def _process_image(path: Path, mask_path: Path | None, source: str, cfg: RunConfig, want: set[str]) -> ImageResult:
    img = load_image(path)
    res = ImageResult(path, img.width, img.height)
    mask = None
    if mask_path is not None and ({"segstat", "facade"} & want):
        mask = load_mask(mask_path)
        if (mask.height, mask.width) != (img.height, img.width):
            raise ValueError(f"{mask_path} ({mask.width}x{mask.height}) does not match {path} ({img.width}x{img.height})")
        if source == "photos" and "segstat" in want:
            res.class_counts = mask.counts()

    balance = cfg.white_balance_photos if source == "photos" else cfg.white_balance_streetviews
    if balance:
        img = gray_world_correct(img)
    hsv = img.hsv()

    if source == "photos" and "palette" in want:
        res.palette = palette_from_hsv(hsv, k=cfg.k, seed=cfg.seed, max_iter=cfg.kmeans_max_iter, n_init=cfg.kmeans_n_init)
        res.top_ccs = top_n_from_counts(ccs_counts(hsv), cfg.top_n)
    if {"histogram", "ks"} & want:
        res.hue_counts = _hue_counts(hsv)
    if mask is not None and "facade" in want:
        keep = np.isin(mask.indices.ravel(), [class_index(c) for c in cfg.facade_classes])
        res.facade_counts = _hue_counts(hsv[keep])
    return res


def _run_images(items, cfg: RunConfig, want: set[str], warnings: list[str]) -> list[ImageResult]:
    def work(item):
        path, mask_path, source = item
        try:
            return _process_image(path, mask_path, source, cfg, want)
        except Exception as exc:  # decode failures are logged and skipped
            return exc

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(work, items))
    else:
        outcomes = [work(it) for it in items]
    results = []
    for (path, _, _), out in zip(items, outcomes):
        if isinstance(out, Exception):
            msg = f"{path}: skipped ({out})"
            log.warning(msg)
            warnings.append(msg)
        else:
            results.append(out)
    return results


def _sum_hist(results: list[ImageResult], attr: str, label: str) -> HueHistogram | None:
    arrays = [getattr(r, attr) for r in results if getattr(r, attr) is not None]
    if not arrays:
        return None
    total = np.sum(arrays, axis=0)
    return HueHistogram(total, label) if total.sum() > 0 else None


def analyze(layout: DatasetLayout, cfg: RunConfig, lexicon: LexiconSet | None = None) -> RunResult:
    """Run every enabled analysis and return in-memory reports (nothing is written)."""
    want = set(cfg.analyses)
    warnings = list(layout.warnings)
    reports = []
    for q in layout.quarters:
        rep = QuarterReport(q.name)
        image_wants = want - {"sentiment"}
        if image_wants & {"palette", "histogram", "ks", "segstat", "facade"}:
            items = [(p, q.masks.get(p), "photos") for p in q.photos]
            if {"histogram", "facade"} & want:
                items += [(p, q.masks.get(p), "streetviews") for p in q.streetviews]
            results = _run_images(items, cfg, image_wants, warnings)
            photos = [r for r in results if r.path.parent.name == "photos"]
            streets = [r for r in results if r.path.parent.name == "streetviews"]
            rep.images = photos

            if {"histogram", "ks"} & want:
                rep.photo_hist = _sum_hist(photos, "hue_counts", f"{q.name}/photos")
                if "histogram" in want:
                    rep.street_hist = _sum_hist(streets, "hue_counts", f"{q.name}/streetviews")
                    if rep.photo_hist is not None:
                        rep.photo_curve = fit_curve(rep.photo_hist, cfg.bandwidth)
                    if rep.street_hist is not None:
                        rep.street_curve = fit_curve(rep.street_hist, cfg.bandwidth)
                if rep.photo_hist is None:
                    rep.notes.append("no decodable photos; hue analyses skipped")

            if "segstat" in want:
                counts = [r.class_counts for r in photos if r.class_counts is not None]
                if counts:
                    rep.proportions = ClassProportions(q.name, np.sum(counts, axis=0).astype(np.int64))
                else:
                    rep.notes.append("no photo masks; segstat disabled for this quarter")

            if "facade" in want:
                rep.facade_photo = _sum_hist(photos, "facade_counts", f"{q.name}/photos/facade")
                rep.facade_street = _sum_hist(streets, "facade_counts", f"{q.name}/streetviews/facade")
                if rep.facade_photo is not None and rep.facade_street is not None:
                    rep.shift = facade_shift_report(rep.facade_photo, rep.facade_street)
                else:
                    rep.notes.append("facade pixels missing in photos or street views; facade comparison disabled")

        if "sentiment" in want:
            if q.reviews is not None:
                if lexicon is None:
                    lexicon = LexiconSet.load(cfg.lexicon) if cfg.lexicon else demo_lexicon()
                try:
                    reviews = load_reviews(q.reviews)
                except (OSError, ValueError) as exc:
                    warnings.append(f"{q.reviews}: skipped ({exc})")
                    reviews = []
                if reviews:
                    # records are attributed to the folder they live in
                    recs = [{"id": r.id, "quarter": q.name, "text": r.text} for r in reviews]
                    rep.sentiment = score_batch(recs, lexicon, workers=cfg.workers)
            if rep.sentiment is None:
                rep.notes.append("no reviews; sentiment disabled for this quarter")
        reports.append(rep)

    ks = None
    heat = None
    failures = []
    if "palette" in want and not any(r.palette for rep in reports for r in rep.images):
        failures.append("palette: no decodable photos")
    if "histogram" in want and not any(rep.photo_hist or rep.street_hist for rep in reports):
        failures.append("histogram: no decodable images")
    if "ks" in want:
        hists = [rep.photo_hist for rep in reports if rep.photo_hist is not None]
        if len(hists) < 2:
            failures.append("ks: fewer than two quarters with decodable photos")
        else:
            ks = ks_matrix(hists)
    if "segstat" in want:
        props = [rep.proportions for rep in reports if rep.proportions is not None]
        if not props:
            failures.append("segstat: no valid photo masks")
        else:
            heat = heatmap_table(props, cfg.heatmap_threshold)
    if "facade" in want and not any(rep.shift for rep in reports):
        failures.append("facade: no quarter has facade pixels in both photos and street views")
    if "sentiment" in want and not any(rep.sentiment for rep in reports):
        failures.append("sentiment: no reviews")

    if failures:
        for f in failures:
            log.error(f)
        exit_code = EXIT_FAILURE
    else:
        exit_code = EXIT_WARNINGS if warnings else EXIT_OK
    return RunResult(reports, ks, heat, warnings + [f"failed: {f}" for f in failures], exit_code)


# ---------------------------------------------------------------------------
# Report writing
# ---------------------------------------------------------------------------


def _rel(path: Path, root: Path) -> str:
    try:
        return path.relative_to(root).as_posix()
    except ValueError:
        return path.as_posix()


def _hist_rows(hist: HueHistogram, curve: FittedCurve | None):
    fr = hist.fractions()
    for b in range(HUE_BINS):
        yield [b, int(hist.bins[b]), float(fr[b]), None if curve is None else float(curve.samples[b])]


def _curve_series(hist: HueHistogram, curve: FittedCurve | None) -> dict:
    d = {
        "label": hist.label,
        "total": hist.total,
        "x": list(range(HUE_BINS)),
        "counts": hist.bins.tolist(),
        "fractions": hist.fractions().tolist(),
    }
    if curve is not None:
        d["curve"] = {"x": curve.centers.tolist(), "y": curve.samples.tolist(), "bandwidth": curve.bandwidth}
    return d


def write_reports(result: RunResult, layout: DatasetLayout, cfg: RunConfig, out_dir) -> ArtifactWriter:
    w = ArtifactWriter(out_dir)
    want = set(cfg.analyses)
    root = layout.root

    if "palette" in want:
        for rep in result.reports:
            if not rep.images:
                continue
            pal_rows, top_rows, doc = [], [], []
            for r in rep.images:
                if r.palette is None:
                    continue
                image = _rel(r.path, root)
                for rank, e in enumerate(r.palette.entries, 1):
                    pal_rows.append([rep.name, image, rank, e.hex, e.proportion, e.center.h, e.center.s, e.center.v,
                                     *e.ccs, str(ccs_name(e.ccs)), int(r.palette.degenerate)])
                for rank, t in enumerate(r.top_ccs, 1):
                    td = t.to_dict()
                    top_rows.append([rep.name, image, rank, *t.code, td["ccs_name"], td["hex"], t.pixel_count, t.fraction])
                doc.append({
                    "image": image,
                    "width": r.width,
                    "height": r.height,
                    "palette": {"degenerate": r.palette.degenerate, "entries": [e.to_dict() for e in r.palette.entries]},
                    "swatches": [list(s) for s in r.palette.swatches()],
                    "top_ccs": [t.to_dict() for t in r.top_ccs],
                })
                w.write_bytes(f"palette/swatches/{rep.name}/{r.path.stem}.png", swatch_png(r.palette.swatches()))
            w.write_csv(f"palette/{rep.name}_palettes.csv",
                        ["quarter", "image", "rank", "hex", "proportion", "h", "s", "v",
                         "ccs_hue", "ccs_sat", "ccs_val", "ccs_name", "degenerate"], pal_rows)
            w.write_csv(f"palette/{rep.name}_top{cfg.top_n}.csv",
                        ["quarter", "image", "rank", "ccs_hue", "ccs_sat", "ccs_val", "ccs_name", "hex",
                         "pixel_count", "fraction"], top_rows)
            w.write_json(f"palette/{rep.name}.json", {"quarter": rep.name, "k": cfg.k, "top_n": cfg.top_n, "images": doc})

    if "histogram" in want:
        series = []
        for rep in result.reports:
            for source, hist, curve in (("photos", rep.photo_hist, rep.photo_curve),
                                        ("streetviews", rep.street_hist, rep.street_curve)):
                if hist is None:
                    continue
                w.write_csv(f"histogram/{rep.name}_{source}.csv", ["bin", "count", "fraction", "curve"],
                            _hist_rows(hist, curve))
                series.append({"quarter": rep.name, "source": source, **_curve_series(hist, curve)})
        w.write_json("histogram/hue_distributions.json", {"bandwidth": cfg.bandwidth, "series": series})

    if "ks" in want and result.ks is not None:
        ks = result.ks
        quarters = [lab.split("/")[0] for lab in ks.labels]
        rows = []
        for i in range(len(quarters)):
            for j in range(i + 1, len(quarters)):
                rows.append([quarters[i], quarters[j], float(ks.values[i, j])])
        w.write_csv("ks/ks_pairs.csv", ["quarter_a", "quarter_b", "ks"], rows)
        w.write_csv("ks/ks_matrix.csv", ["quarter", *quarters],
                    ([q, *map(float, ks.values[i])] for i, q in enumerate(quarters)))
        w.write_json("ks/ks_matrix.json", {"labels": quarters, "values": ks.values.tolist()})

    if "segstat" in want and result.heatmap is not None:
        rows = []
        for rep in result.reports:
            if rep.proportions is None:
                continue
            p = rep.proportions
            rows.append([rep.name, 0, "Background", p.background, None, p.background / p.total if p.total else 0.0])
            rows.extend([r["quarter"], r["class_index"], r["class"], r["pixels"], r["fraction_foreground"],
                         r["fraction_total"]] for r in p.rows())
        w.write_csv("segstat/class_proportions.csv",
                    ["quarter", "class_index", "class", "pixels", "fraction_foreground", "fraction_total"], rows)
        heat = result.heatmap
        w.write_csv("segstat/heatmap.csv", ["quarter", *FOREGROUND],
                    ([q, *map(float, heat.values[i])] for i, q in enumerate(heat.quarters)))
        w.write_json("segstat/heatmap.json", heat.to_dict())

    if "facade" in want:
        rows, doc = [], {}
        for rep in result.reports:
            if rep.shift is None:
                continue
            sd = rep.shift.to_dict()
            doc[rep.name] = {
                **sd,
                "photo": _curve_series(rep.facade_photo, fit_curve(rep.facade_photo, cfg.bandwidth)),
                "streetview": _curve_series(rep.facade_street, fit_curve(rep.facade_street, cfg.bandwidth)),
            }
            for band, b in sd["bands"].items():
                rows.append([rep.name, band, b["range"][0], b["range"][1], b["photo_fraction"], b["street_fraction"],
                             b["delta"], b["direction"], sd["ks"]])
        w.write_csv("facade/facade_shift.csv",
                    ["quarter", "band", "hue_lo", "hue_hi", "photo_fraction", "street_fraction", "delta",
                     "direction", "ks"], rows)
        w.write_json("facade/facade_shift.json", {"facade_classes": list(cfg.facade_classes), "quarters": doc})

    if "sentiment" in want:
        rows, summary = [], {}
        for rep in result.reports:
            if rep.sentiment is None:
                continue
            for rid, quarter, s in rep.sentiment.scores:
                rows.append([rid, quarter, *s.as_tuple()])
            for q, means in rep.sentiment.quarter_means.items():
                summary[q] = {"reviews": rep.sentiment.quarter_counts[q], "mean": means}
        w.write_csv("sentiment/scores.csv", ["id", "quarter", *DIMENSIONS], rows)
        w.write_json("sentiment/summary.json", {"dimensions": list(DIMENSIONS), "quarters": summary})

    w.write_json("manifest.json", {
        "tool": "urbanperception",
        "version": __version__,
        "config": cfg.to_dict(),
        "dataset": {q.name: q.inventory() for q in layout.quarters},
        "notes": {rep.name: rep.notes for rep in result.reports if rep.notes},
        "warnings": [_strip_root(msg, root) for msg in result.warnings],
        "exit_code": result.exit_code,
        "artifacts": w.manifest(),
    })
    return w


def _strip_root(msg: str, root: Path) -> str:
    return msg.replace(str(root) + "/", "")


def run(layout: DatasetLayout, cfg: RunConfig, out_dir=None, lexicon: LexiconSet | None = None) -> RunResult:
    """Analyze ``layout`` and, when ``out_dir`` is given, write all reports plus a manifest."""
    result = analyze(layout, cfg, lexicon)
    if out_dir is not None:
        write_reports(result, layout, cfg, out_dir)
        result.out_dir = Path(out_dir)
    return result
