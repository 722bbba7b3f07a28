"""Resampling, filtering, size normalization and velocity profiles."""

import numpy as np
import pytest

from helpers import build_sample, circle_sample, line_sample

from hqa.preprocess import (
    PreprocessError,
    lowpass,
    normalize_size,
    preprocess,
    resample_uniform,
    velocity_profile,
)


def test_resample_preserves_uniform_input():
    sample = line_sample(n=101, rate=100.0)
    out = resample_uniform(sample, rate=100.0)
    assert np.allclose(out.strokes[0].times(), sample.strokes[0].times())
    assert np.allclose(out.strokes[0].xy(), sample.strokes[0].xy())


def test_resample_linearly_interpolates_two_points():
    sample = build_sample([[(0.0, 0.0, 0.0), (4.0, 8.0, 1.0)]])
    out = resample_uniform(sample, rate=4.0)
    assert np.allclose(out.strokes[0].times(), [0.0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(out.strokes[0].xy()[:, 0], [0.0, 1.0, 2.0, 3.0, 4.0])
    assert np.allclose(out.strokes[0].xy()[:, 1], [0.0, 2.0, 4.0, 6.0, 8.0])


def test_resample_matches_piecewise_linear_oracle():
    rng = np.random.default_rng(11)
    ts = np.sort(rng.uniform(0.0, 2.0, size=17))
    ts[0], ts[-1] = 0.0, 2.0
    xs = rng.uniform(0.0, 50.0, size=17)
    ys = rng.uniform(0.0, 50.0, size=17)
    sample = build_sample([list(zip(xs, ys, ts))])
    out = resample_uniform(sample, rate=50.0)
    got_t = out.strokes[0].times()
    assert got_t[0] == ts[0] and got_t[-1] == ts[-1]
    assert np.allclose(np.diff(got_t), got_t[1] - got_t[0])
    assert np.allclose(out.strokes[0].xy()[:, 0], np.interp(got_t, ts, xs))
    assert np.allclose(out.strokes[0].xy()[:, 1], np.interp(got_t, ts, ys))


def test_resample_rejects_zero_duration():
    sample = build_sample([[(0, 0, 0.0), (1, 1, 0.0)]])
    with pytest.raises(PreprocessError, match="duration"):
        resample_uniform(sample, rate=100.0)


def _sine_sample(freq_hz, n=400, rate=100.0, amp=10.0):
    ts = np.arange(n) / rate
    xs = 50.0 + ts * 10.0
    ys = 60.0 + amp * np.sin(2.0 * np.pi * freq_hz * ts)
    return build_sample([list(zip(xs, ys, ts))])


def _fitted_amplitude(sample, freq_hz, rate=100.0):
    """Least-squares sinusoid amplitude at freq_hz, interior points only."""
    ys = sample.strokes[0].xy()[:, 1]
    ts = sample.strokes[0].times()
    cut = int(0.15 * len(ys))
    ys = ys[cut:-cut] - np.mean(ys[cut:-cut])
    ts = ts[cut:-cut]
    basis = np.stack([np.sin(2 * np.pi * freq_hz * ts), np.cos(2 * np.pi * freq_hz * ts)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, ys, rcond=None)
    return float(np.hypot(*coef))


def test_lowpass_passband_and_stopband():
    before_2 = _fitted_amplitude(_sine_sample(2.0), 2.0)
    after_2 = _fitted_amplitude(lowpass(_sine_sample(2.0), rate=100.0), 2.0)
    atten_2 = 20.0 * np.log10(before_2 / after_2)
    assert abs(atten_2) <= 1.0

    before_20 = _fitted_amplitude(_sine_sample(20.0), 20.0)
    after_20 = _fitted_amplitude(lowpass(_sine_sample(20.0), rate=100.0), 20.0)
    atten_20 = 20.0 * np.log10(before_20 / after_20)
    assert atten_20 >= 30.0


def test_lowpass_leaves_dc_untouched():
    # constant position is pure DC; the filter's zero-frequency gain is 1
    sample = build_sample([[(30.0, 60.0, i / 100.0) for i in range(200)]])
    out = lowpass(sample, rate=100.0)
    assert np.max(np.abs(out.strokes[0].xy() - sample.strokes[0].xy())) <= 1e-9


def test_lowpass_passes_short_stroke_through_with_warning():
    sample = build_sample([[(i, 50.0, i / 100.0) for i in range(5)]])
    with pytest.warns(UserWarning, match="too short"):
        out = lowpass(sample, rate=100.0)
    assert out.strokes[0] == sample.strokes[0]


def test_lowpass_preserves_counts_and_endpoints():
    sample = circle_sample(n=300)
    out = lowpass(sample, rate=100.0)
    assert len(out.strokes[0]) == len(sample.strokes[0])
    assert np.allclose(out.strokes[0].xy()[0], sample.strokes[0].xy()[0])
    assert np.allclose(out.strokes[0].xy()[-1], sample.strokes[0].xy()[-1])


def test_normalize_scales_height_to_target():
    sample = build_sample([[(0, 0, 0.0), (100, 256, 1.0)]])
    out = normalize_size(sample, height=128.0)
    x0, y0, x1, y1 = out.bounds()
    assert (y1 - y0) == pytest.approx(128.0)
    # uniform scale: width halves along with the height
    assert (x1 - x0) == pytest.approx(50.0)
    assert (x0, y0) == (0.0, 0.0)


def test_normalize_upscales_small_samples():
    sample = build_sample([[(0, 0, 0.0), (10, 64, 1.0)]])
    out = normalize_size(sample, height=128.0)
    _, y0, _, y1 = out.bounds()
    assert (y1 - y0) == pytest.approx(128.0)


def test_normalize_is_idempotent():
    sample = circle_sample()
    once = normalize_size(sample, height=128.0)
    twice = normalize_size(once, height=128.0)
    assert np.allclose(once.all_xy(), twice.all_xy())


def test_normalize_co_scales_guidelines():
    sample = build_sample(
        [[(0, 0, 0.0), (50, 256, 1.0)]], baseline=200.0, median_top=100.0
    )
    out = normalize_size(sample, height=128.0)
    assert out.guidelines.baseline_y == pytest.approx(100.0)
    assert out.guidelines.median_top_y == pytest.approx(50.0)


def test_normalize_flat_sample_uses_width():
    sample = build_sample([[(0, 60, 0.0), (64, 60, 1.0)]])
    out = normalize_size(sample, height=128.0)
    x0, _, x1, _ = out.bounds()
    assert (x1 - x0) == pytest.approx(128.0)


def test_normalize_rejects_single_repeated_point():
    sample = build_sample([[(5, 5, 0.0), (5, 5, 1.0)]])
    with pytest.raises(PreprocessError, match="degenerate"):
        normalize_size(sample)


def test_velocity_constant_speed_line():
    # 80 units in 0.49 s at uniform spacing: speed everywhere 80/0.49
    sample = line_sample(n=50, rate=100.0)
    prof = velocity_profile(sample, rate=100.0)
    expect = 80.0 / 0.49
    assert np.allclose(prof.v, expect, rtol=1e-6)
    assert prof.stroke_spans == ((0, 49),)
    assert prof.dt == pytest.approx(0.01)


def test_velocity_circle_matches_r_omega():
    # r = 30, one turn in 1.99 s: |v| = r * 2*pi / 1.99, checked away from ends
    sample = circle_sample(n=200, rate=100.0, r=30.0)
    prof = velocity_profile(sample, rate=100.0)
    expect = 30.0 * 2.0 * np.pi / 1.99
    interior = prof.v[5:-5]
    assert np.allclose(interior, expect, rtol=0.01)


def test_velocity_zero_in_pen_up_gap():
    s1 = [(0.0, 50.0, 0.00 + 0.01 * i) for i in range(20)]
    s2 = [(50.0, 50.0 + i, 0.50 + 0.01 * i) for i in range(20)]
    sample = build_sample([
        [(x + i, y, t) for i, (x, y, t) in enumerate(s1)],
        s2,
    ])
    prof = velocity_profile(sample, rate=100.0)
    (a0, a1), (b0, b1) = prof.stroke_spans
    assert a1 < b0
    gap = prof.v[a1 + 1 : b0]
    assert gap.size > 0
    assert np.all(gap == 0.0)
    assert np.all(prof.v[b0 : b1 + 1] > 0.0)


def test_preprocess_chain_produces_normalized_sample():
    out = preprocess(circle_sample(), rate=100.0, height=128.0)
    _, y0, _, y1 = out.bounds()
    assert (y1 - y0) == pytest.approx(128.0, abs=1e-6)
    assert len(out.strokes) == 1
