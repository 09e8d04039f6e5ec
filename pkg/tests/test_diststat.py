import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from urbanperception.diststat import (
    HUE_BINS,
    HueHistogram,
    build_histogram,
    facade_shift_report,
    fit_curve,
    ks_matrix,
    ks_statistic,
)

counts = st.lists(st.integers(0, 50), min_size=HUE_BINS, max_size=HUE_BINS).filter(lambda c: sum(c) > 0)


def hist_from(d: dict, label="") -> HueHistogram:
    bins = np.zeros(HUE_BINS, dtype=np.int64)
    for b, c in d.items():
        bins[b] = c
    return HueHistogram(bins, label)


def uniform(lo, hi, label="", weight=1):
    return hist_from({b: weight for b in range(lo, hi + 1)}, label)


def ks_bruteforce(a: HueHistogram, b: HueHistogram) -> float:
    """Classic two-sample KS over expanded samples: sup of |ECDF_a - ECDF_b|."""
    xa = np.repeat(np.arange(HUE_BINS), a.bins)
    xb = np.repeat(np.arange(HUE_BINS), b.bins)
    best = 0.0
    for x in np.union1d(xa, xb):
        fa = np.count_nonzero(xa <= x) / len(xa)
        fb = np.count_nonzero(xb <= x) / len(xb)
        best = max(best, abs(fa - fb))
    return best


def wrapped_gaussian_direct(hist: HueHistogram, bw: float) -> np.ndarray:
    """Direct double loop over bins and periodic images of every count."""
    out = np.zeros(HUE_BINS)
    for i in range(HUE_BINS):
        for j in np.flatnonzero(hist.bins):
            for m in range(-3, 4):
                d = (i - j) + 180 * m
                out[i] += hist.bins[j] * math.exp(-d * d / (2 * bw * bw))
    return out / out.sum()


# --- histograms -------------------------------------------------------------


def test_build_histogram_examples():
    h = build_histogram([(60, 0.5, 0.5)] * 10)
    assert h.bins[60] == 10 and h.total == 10
    assert build_histogram([(179.9, 1, 1)]).bins[179] == 1
    mixed = build_histogram([(h, 1, 1) for h in (0, 0.5, 1.0, 4.4, 4.5)])
    assert {i: int(c) for i, c in enumerate(mixed.bins) if c} == {0: 2, 1: 1, 4: 2}


def test_build_histogram_empty():
    with pytest.raises(ValueError):
        build_histogram([])


# --- curve fitting ----------------------------------------------------------


def test_curve_single_spike_is_symmetric():
    curve = fit_curve(hist_from({40: 7}))
    s = curve.samples
    assert int(np.argmax(s)) == 40
    for r in range(1, 90):
        assert s[(40 + r) % 180] == pytest.approx(s[(40 - r) % 180], rel=1e-12, abs=1e-300)


def test_curve_uniform_is_flat():
    curve = fit_curve(HueHistogram(np.full(HUE_BINS, 3)))
    assert np.allclose(curve.samples, 1 / 180, rtol=0, atol=1e-15)


def test_curve_two_wrap_spikes_peak_at_wrap():
    h = hist_from({0: 5, 179: 5})
    curve = fit_curve(h)
    peak = int(np.argmax(curve.samples))
    assert peak in (0, 179)
    assert curve.samples[90] < 1e-6 * curve.samples[peak]
    assert np.allclose(curve.samples, wrapped_gaussian_direct(h, 4.5), rtol=1e-9, atol=1e-15)


@settings(max_examples=15, deadline=None)
@given(counts, st.sampled_from([1.0, 4.5, 12.0]))
def test_curve_matches_direct_summation(c, bw):
    h = HueHistogram(np.array(c))
    assert np.allclose(fit_curve(h, bw).samples, wrapped_gaussian_direct(h, bw), rtol=1e-9, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(counts, st.integers(0, 179), st.floats(0.5, 40))
def test_curve_mass_and_rotation(c, r, bw):
    h = HueHistogram(np.array(c))
    curve = fit_curve(h, bw)
    assert abs(curve.samples.sum() - 1) <= 1e-6
    rotated = fit_curve(HueHistogram(np.roll(h.bins, r)), bw)
    assert np.array_equal(rotated.samples, np.roll(curve.samples, r))


def test_curve_rejects_bad_bandwidth():
    with pytest.raises(ValueError):
        fit_curve(hist_from({0: 1}), 0)
    with pytest.raises(ValueError):
        fit_curve(hist_from({0: 1}), -1.0)


# --- KS ---------------------------------------------------------------------


def test_ks_examples():
    a = uniform(0, 89)
    assert ks_statistic(a, a) == 0.0
    assert ks_statistic(hist_from({0: 4}), hist_from({179: 9})) == 1.0
    assert ks_statistic(uniform(0, 89), uniform(0, 179)) == pytest.approx(0.5, abs=1e-12)


def test_ks_rejects_empty():
    with pytest.raises(ValueError):
        ks_statistic(HueHistogram(np.zeros(HUE_BINS)), uniform(0, 10))


@settings(max_examples=40, deadline=None)
@given(counts, counts)
def test_ks_matches_bruteforce(ca, cb):
    a, b = HueHistogram(np.array(ca)), HueHistogram(np.array(cb))
    assert ks_statistic(a, b) == pytest.approx(ks_bruteforce(a, b), abs=1e-12)


@given(counts, counts, st.integers(1, 1000))
def test_ks_symmetric_bounded_scale_invariant(ca, cb, scale):
    a, b = HueHistogram(np.array(ca)), HueHistogram(np.array(cb))
    d = ks_statistic(a, b)
    assert 0 <= d <= 1
    assert d == ks_statistic(b, a)
    assert ks_statistic(HueHistogram(a.bins * scale), b) == d


def test_ks_matrix_structure():
    hs = [uniform(0, 89, "a"), uniform(0, 179, "b"), hist_from({120: 3}, "c")]
    m = ks_matrix(hs)
    assert m.labels == ["a", "b", "c"]
    assert m.values.shape == (3, 3)
    assert np.array_equal(m.values, m.values.T)
    assert np.all(np.diag(m.values) == 0)
    assert m.values[0, 1] == ks_statistic(hs[0], hs[1])
    assert np.array_equal(ks_matrix([hs[0], hs[0]]).values, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        ks_matrix(hs[:1])


# --- facade shift -----------------------------------------------------------


def test_shift_identical():
    h = uniform(10, 140)
    rep = facade_shift_report(h, h)
    assert rep.ks == 0
    assert all(v == 0 for v in rep.deltas.values())


def test_shift_extremes():
    rep = facade_shift_report(hist_from({120: 10}), hist_from({15: 10}))
    assert rep.deltas["blue"] == 1.0 and rep.deltas["warm"] == -1.0 and rep.deltas["green"] == 0
    assert rep.ks == 1.0
    assert rep.direction == {"warm": -1, "green": 0, "blue": 1}


def test_shift_uniform_bands():
    rep = facade_shift_report(uniform(105, 135), uniform(0, 30))
    assert rep.deltas == {"warm": -1.0, "green": 0.0, "blue": 1.0}
    d = rep.to_dict()
    assert d["bands"]["blue"]["range"] == [105, 135]
