import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kmeans_oracle import optimal_wcss, wcss
from urbanperception.color import CcsCode, PixelImage, hsv_to_rgb, quantize_to_ccs, rgb_to_hsv
from urbanperception.palette import (
    ccs_counts,
    ccs_top_n,
    cone_to_hsv,
    embed_cone,
    embed_cone_array,
    kmeans,
    kmeans_palette,
    palette_from_hsv,
)

log = logging.getLogger(__name__)


def test_embed_cone_examples():
    assert embed_cone((0, 1, 1)) == pytest.approx((1, 0, 1))
    assert embed_cone((77.7, 0, 0.5)) == (0.0, 0.0, 0.5)
    assert embed_cone((45, 1, 1)) == pytest.approx((0, 1, 1), abs=1e-15)


@given(st.floats(0, 179.99), st.floats(0, 1), st.floats(0, 1))
def test_cone_invariants(h, s, v):
    x, y, z = embed_cone((h, s, v))
    assert x * x + y * y <= v * v + 1e-12
    assert 0 <= z <= 1
    if s > 1e-6 and v > 1e-6:
        back = cone_to_hsv((x, y, z))
        dh = abs(back.h - h)
        assert min(dh, 180 - dh) < 1e-6
        assert back.s == pytest.approx(s, abs=1e-9)
        assert back.v == pytest.approx(v, abs=1e-12)


def test_uniform_image_is_degenerate():
    img = PixelImage(np.full((4, 4, 3), (10, 200, 30), dtype=np.uint8))
    pal = kmeans_palette(img, k=5, seed=1)
    assert pal.degenerate
    assert len(pal.entries) == 1
    assert pal.entries[0].proportion == 1.0
    assert pal.entries[0].rgb == (10, 200, 30)


def test_two_color_image_exact_centers():
    px = [(255, 0, 0)] * 3 + [(0, 0, 255)] * 7
    img = PixelImage.from_pixels(10, 1, px)
    pal = kmeans_palette(img, k=2, seed=0)
    assert not pal.degenerate
    blue, red = pal.entries
    assert (blue.proportion, red.proportion) == (0.7, 0.3)
    assert blue.hex == "#0000ff" and red.hex == "#ff0000"
    assert blue.center == pytest.approx((120, 1, 1), abs=1e-9)
    assert red.center == pytest.approx((0, 1, 1), abs=1e-9)

    # brute force over all 2-partitions of the 10 pixels
    pts = embed_cone_array(img.hsv())
    assert optimal_wcss(pts, 2) == pytest.approx(0.0, abs=1e-12)
    assert pal.inertia == pytest.approx(0.0, abs=1e-12)


def test_k1_center_is_cone_mean():
    rng = np.random.default_rng(5)
    data = rng.integers(0, 256, size=(5, 7, 3)).astype(np.uint8)
    img = PixelImage(data)
    pal = kmeans_palette(img, k=1, seed=3)
    assert len(pal.entries) == 1 and pal.entries[0].proportion == 1.0
    mean = embed_cone_array(img.hsv()).mean(axis=0)
    assert embed_cone(pal.entries[0].center) == pytest.approx(tuple(mean), abs=1e-12)


def test_hue_wraparound_clusters_near_red():
    px = [hsv_to_rgb((1, 1, 1))] * 5 + [hsv_to_rgb((179, 1, 1))] * 5
    hues = [rgb_to_hsv(p).h for p in px]
    assert hues[0] < 2 and hues[-1] > 178
    pal = kmeans_palette(PixelImage.from_pixels(10, 1, px), k=1, seed=0)
    h = pal.entries[0].center.h
    assert min(h, 180 - h) <= 2
    assert abs(h - 90) > 80


def test_kmeans_matches_exhaustive_optimum():
    rng = np.random.default_rng(2024)
    hits, misses = 0, []
    for trial in range(100):
        k = int(rng.integers(1, 4))
        n = int(rng.integers(k, 13))
        rgb = rng.integers(0, 256, size=(n, 3))
        pts = embed_cone_array(PixelImage.from_pixels(n, 1, rgb).hsv())
        if len(np.unique(pts, axis=0)) < k:
            continue
        res = kmeans(pts, k, seed=trial)
        got = wcss(pts, res.labels)
        best = optimal_wcss(pts, k)
        if abs(got - best) <= 1e-9:
            hits += 1
        else:
            misses.append((trial, n, k, got, best))
    for m in misses:
        log.info("k-means local optimum: trial=%d n=%d k=%d got=%.6g best=%.6g", *m)
    assert hits + len(misses) >= 95
    assert hits / (hits + len(misses)) >= 0.95


def test_palette_is_deterministic():
    rng = np.random.default_rng(11)
    img = PixelImage(rng.integers(0, 256, size=(20, 20, 3)).astype(np.uint8))
    a = kmeans_palette(img, k=5, seed=42)
    b = kmeans_palette(img, k=5, seed=42)
    assert a == b
    assert sum(e.proportion for e in a.entries) == pytest.approx(1.0, abs=1e-9)
    props = [e.proportion for e in a.entries]
    assert props == sorted(props, reverse=True)
    for e in a.entries:
        assert e.ccs == quantize_to_ccs(e.center)


def test_large_images_are_subsampled():
    rng = np.random.default_rng(0)
    hsv = np.column_stack([rng.uniform(0, 180, 3000), rng.uniform(0, 1, 3000), rng.uniform(0, 1, 3000)])
    pal = palette_from_hsv(hsv, k=3, seed=1, max_pixels=500)
    assert sum(e.proportion for e in pal.entries) == pytest.approx(1.0)
    # proportions are shares of the 500-point subsample
    assert all(abs(e.proportion * 500 - round(e.proportion * 500)) < 1e-9 for e in pal.entries)


def test_empty_and_bad_k():
    with pytest.raises(ValueError):
        palette_from_hsv(np.empty((0, 3)))
    with pytest.raises(ValueError):
        palette_from_hsv([(0, 1, 1)], k=0)


def test_empty_cluster_is_reseeded():
    # two far-apart duplicates plus one point: a bad start can empty a cluster,
    # but the result must always have k populated clusters
    pts = np.array([[0, 0, 0]] * 5 + [[1, 0, 1]] * 5 + [[0, 1, 1]], dtype=float)
    for seed in range(20):
        res = kmeans(pts, 3, seed=seed, n_init=1)
        assert len(np.unique(res.labels)) == 3


# --- CCS top-N --------------------------------------------------------------


def test_ccs_top_n_uniform():
    img = PixelImage(np.full((3, 3, 3), 77, dtype=np.uint8))
    top = ccs_top_n(img)
    assert len(top) == 1 and top[0].fraction == 1.0 and top[0].pixel_count == 9


def test_ccs_top_n_counts_and_order():
    # three distinct codes with 50 / 30 / 20 pixels
    px = [(255, 0, 0)] * 20 + [(0, 0, 255)] * 50 + [(0, 255, 0)] * 30
    img = PixelImage.from_pixels(10, 10, px)
    top = ccs_top_n(img, n=20)
    assert len(top) == 3
    assert [t.fraction for t in top] == [0.5, 0.3, 0.2]
    assert [t.code for t in top] == [
        quantize_to_ccs(rgb_to_hsv((0, 0, 255))),
        quantize_to_ccs(rgb_to_hsv((0, 255, 0))),
        quantize_to_ccs(rgb_to_hsv((255, 0, 0))),
    ]


def test_ccs_top_n_tie_break_by_code():
    px = [(0, 0, 255)] * 2 + [(255, 0, 0)] * 2
    top = ccs_top_n(PixelImage.from_pixels(4, 1, px), n=2)
    assert top[0].code < top[1].code
    assert top[0].code == CcsCode(0, 4, 4)


@settings(max_examples=40)
@given(arrays(np.uint8, st.tuples(st.integers(1, 10), st.integers(1, 10), st.just(3))), st.integers(1, 30))
def test_ccs_counts_sum_to_pixels(data, n):
    img = PixelImage(data)
    counts = ccs_counts(img.hsv())
    assert counts.sum() == img.width * img.height
    top = ccs_top_n(img, n)
    assert len(top) == min(n, int((counts > 0).sum()))
    keys = [(-t.pixel_count, t.code) for t in top]
    assert keys == sorted(keys)
