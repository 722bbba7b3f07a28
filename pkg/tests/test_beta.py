"""Beta pulse algebra, velocity segmentation, pulse/arc fitting, decompose."""

import math

import numpy as np
import pytest

from helpers import build_sample, circle_sample

from hqa.beta_elliptic import (
    BetaEllipticModel,
    BetaPulse,
    BetaStroke,
    EllipticArc,
    beta_pulse,
    consolidate_spans,
    decompose,
    fit_arc,
    fit_pulses,
    local_minima,
    segment_spans,
)
from hqa.preprocess import VelocityProfile


def _profile(v, dt=0.01, spans=None):
    v = np.asarray(v, dtype=float)
    t = np.arange(len(v)) * dt
    spans = spans or ((0, len(v) - 1),)
    return VelocityProfile(t=t, v=v, stroke_spans=tuple(spans))


def test_beta_pulse_zero_outside_support():
    pulse = BetaPulse(1.0, 2.0, 2.0, 0.0, 1.0)
    t = np.array([-5.0, -0.001, 1.001, 7.0])
    assert np.all(beta_pulse(t, pulse) == 0.0)


def test_beta_pulse_peaks_at_amplitude():
    pulse = BetaPulse(3.5, 2.7, 1.3, 0.2, 1.4)
    tc = pulse.peak_time
    assert beta_pulse(np.array([tc]), pulse)[0] == pytest.approx(3.5)
    # nowhere above the amplitude
    t = np.linspace(0.2, 1.4, 2001)
    assert np.max(beta_pulse(t, pulse)) <= 3.5 + 1e-12


def test_beta_pulse_hand_value():
    # K=1, p=q=2, support [0,1]: tc=0.5, value at t=0.25 is (0.5)^2*(1.5)^2
    pulse = BetaPulse(1.0, 2.0, 2.0, 0.0, 1.0)
    assert beta_pulse(np.array([0.25]), pulse)[0] == pytest.approx(0.5625, abs=1e-12)


def test_peak_time_formula():
    # tc = (p*t1 + q*t0) / (p+q)
    assert BetaPulse(1.0, 3.0, 2.0, 0.0, 0.5).peak_time == pytest.approx(0.3)
    # equal exponents peak at the midpoint
    assert BetaPulse(1.0, 4.0, 4.0, 0.2, 1.0).peak_time == pytest.approx(0.6)


def test_local_minima_matches_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(50):
        v = rng.uniform(0.0, 1.0, size=rng.integers(3, 40))
        got = local_minima(v)
        want = [
            i for i in range(1, len(v) - 1) if v[i - 1] > v[i] and v[i] <= v[i + 1]
        ]
        assert got == want


def test_local_minima_plateau_collapses_left():
    v = np.array([3.0, 1.0, 1.0, 1.0, 3.0])
    assert local_minima(v) == [1]


def test_segment_one_bump_is_one_span():
    v = beta_pulse(np.arange(0, 0.5 + 1e-9, 0.01), BetaPulse(2.0, 2.0, 2.0, 0.0, 0.5))
    assert segment_spans(_profile(v)) == [(0, 50)]


def test_segment_splits_at_speed_minimum():
    t = np.arange(0, 0.8 + 1e-9, 0.01)
    v = beta_pulse(t, BetaPulse(1.5, 2.0, 2.0, 0.0, 0.42)) + beta_pulse(
        t, BetaPulse(1.0, 2.0, 2.0, 0.38, 0.8)
    )
    spans = segment_spans(_profile(v))
    interior = [
        i for i in range(1, len(v) - 1) if v[i - 1] > v[i] and v[i] <= v[i + 1]
    ]
    assert len(interior) == 1
    cut = interior[0]
    assert spans == [(0, cut), (cut, len(v) - 1)]


def test_segment_constant_profile_single_span_per_stroke():
    v = np.ones(30)
    prof = _profile(v, spans=((0, 14), (20, 29)))
    assert segment_spans(prof) == [(0, 14), (20, 29)]


def test_consolidate_merges_shallow_dip():
    v = np.array([0.0, 1.0, 2.0, 1.9, 2.0, 1.0, 0.0])
    prof = _profile(v)
    spans = segment_spans(prof)
    assert len(spans) == 2
    assert consolidate_spans(prof, spans) == [(0, 6)]


def test_consolidate_keeps_deep_halt():
    up = np.linspace(0.0, 2.0, 10)
    down = np.linspace(2.0, 0.1, 10)
    v = np.concatenate([up, down[1:], up[1:] + 0.1, down[1:]])
    prof = _profile(v)
    spans = segment_spans(prof)
    assert len(spans) == 2
    assert consolidate_spans(prof, spans) == spans


def test_consolidate_merges_sliver_fragment():
    # deep dip but a 3-point right fragment: too short to stand alone
    v = np.array([0.0, 1.0, 2.0, 1.0, 0.05, 1.8, 0.0])
    prof = _profile(v)
    spans = segment_spans(prof)
    assert len(spans) == 2
    assert consolidate_spans(prof, spans) == [(0, 6)]


def test_consolidate_never_crosses_pen_up():
    v = np.concatenate([np.ones(10), np.zeros(5), np.ones(10)])
    prof = _profile(v, spans=((0, 9), (15, 24)))
    spans = segment_spans(prof)
    assert consolidate_spans(prof, spans) == [(0, 9), (15, 24)]


def test_fit_recovers_single_pulse_parameters():
    true = BetaPulse(2.0, 3.0, 2.0, 0.0, 0.5)
    t = np.arange(0, 0.5 + 1e-9, 0.01)
    prof = _profile(beta_pulse(t, true))
    fit = fit_pulses(prof, segment_spans(prof))
    assert fit.converged
    got = fit.pulses[0]
    for name in ("amplitude", "rise_exponent", "fall_exponent", "start", "end"):
        want = getattr(true, name)
        scale = max(abs(want), true.duration())
        assert abs(getattr(got, name) - want) / scale <= 1e-3, name


def test_fit_three_pulse_reconstruction_error():
    pulses = [
        BetaPulse(1.5, 2.0, 3.0, 0.0, 0.4),
        BetaPulse(2.5, 4.0, 2.0, 0.35, 0.8),
        BetaPulse(1.0, 2.0, 2.0, 0.75, 1.2),
    ]
    t = np.arange(0, 1.2 + 1e-9, 0.01)
    v = sum(beta_pulse(t, p) for p in pulses)
    prof = _profile(v)
    fit = fit_pulses(prof, segment_spans(prof))
    recon = np.zeros_like(t)
    for p in fit.pulses:
        recon += beta_pulse(t, p)
    rmse = float(np.sqrt(np.mean((recon - v) ** 2)))
    assert rmse <= 0.02 * float(v.max())


def test_fit_flags_zero_speed_span_degenerate():
    v = np.concatenate([np.zeros(12), beta_pulse(np.arange(13) * 0.01, BetaPulse(1.0, 2.0, 2.0, 0.0, 0.12))])
    prof = _profile(v, spans=((0, 11), (12, 24)))
    fit = fit_pulses(prof, [(0, 11), (12, 24)])
    assert fit.degenerate == (True, False)
    assert fit.pulses[0].amplitude == 0.0


def test_fit_arc_recovers_rotated_ellipse():
    a_true, b_true, theta = 10.0, 5.0, math.pi / 6
    s = np.linspace(-0.8, 0.8, 60)
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    pts = (rot @ np.stack([a_true * np.cos(s), b_true * np.sin(s)])).T + [3.0, 7.0]
    arc = fit_arc(pts, np.ones(len(pts)))
    assert arc.semi_major == pytest.approx(a_true, rel=0.01)
    assert arc.semi_minor == pytest.approx(b_true, rel=0.01)
    diff = (arc.axis_angle - theta + math.pi / 2) % math.pi - math.pi / 2
    assert abs(diff) <= 0.02


def test_fit_arc_circle_has_equal_axes():
    ang = np.linspace(0.0, 1.5, 80)
    pts = np.stack([8.0 * np.cos(ang), 8.0 * np.sin(ang)], axis=1)
    arc = fit_arc(pts, np.ones(len(ang)))
    assert arc.semi_major == pytest.approx(8.0, rel=0.01)
    assert arc.semi_minor == pytest.approx(8.0, rel=0.01)


def test_fit_arc_line_falls_back_to_chord():
    phi = 0.7
    s = np.linspace(0.0, 20.0, 40)
    pts = np.stack([s * math.cos(phi), s * math.sin(phi)], axis=1)
    arc = fit_arc(pts, np.ones(len(pts)))
    assert arc.semi_major == pytest.approx(10.0, rel=1e-6)
    assert arc.semi_minor <= 0.01
    assert arc.tangent_angle == pytest.approx(phi, abs=0.01)
    assert arc.axis_angle == pytest.approx(phi, abs=0.01)


def test_stroke_feature_layout():
    pulse = BetaPulse(2.0, 3.0, 2.0, 0.0, 0.5)
    arc = EllipticArc(4.0, 1.5, 0.3, 0.9)
    stroke = BetaStroke(
        pulse=pulse,
        arc=arc,
        span=(0, 10),
        start_point=(0.0, 0.0),
        end_point=(3.0, 4.0),
        zones=(0.2, 0.7, 0.1),
    )
    f = stroke.features()
    tc = pulse.peak_time
    want = [2.0, 3.0, 2.0, tc - 0.0, 0.5 - tc, 4.0, 1.5, 0.3, 0.9, 0.2, 0.7, 0.1]
    assert f.shape == (12,)
    assert np.allclose(f, want)
    assert stroke.displacement_angle == pytest.approx(math.atan2(4.0, 3.0))


def test_displacement_angle_of_closed_stroke_uses_tangent():
    stroke = BetaStroke(
        pulse=BetaPulse(1.0, 2.0, 2.0, 0.0, 1.0),
        arc=EllipticArc(1.0, 1.0, 0.0, 0.42),
        span=(0, 10),
        start_point=(5.0, 5.0),
        end_point=(5.0, 5.0),
    )
    assert stroke.displacement_angle == pytest.approx(0.42)


def test_feature_matrix_skips_degenerate_rows():
    ok = BetaStroke(
        pulse=BetaPulse(1.0, 2.0, 2.0, 0.0, 1.0),
        arc=EllipticArc(1.0, 1.0, 0.0, 0.0),
        span=(0, 10),
        start_point=(0.0, 0.0),
        end_point=(1.0, 1.0),
    )
    bad = BetaStroke(
        pulse=BetaPulse(0.0, 2.0, 2.0, 0.0, 1.0),
        arc=EllipticArc(1.0, 1.0, 0.0, 0.0),
        span=(10, 20),
        start_point=(1.0, 1.0),
        end_point=(2.0, 2.0),
        degenerate=True,
    )
    model = BetaEllipticModel(strokes=(ok, bad), rmse=0.0, converged=True)
    assert model.n == 2
    assert model.feature_matrix().shape == (1, 12)
    assert model.feature_matrix(include_degenerate=True).shape == (2, 12)


def test_decompose_time_scaling_doubles_durations_only():
    base = circle_sample(n=200, rate=100.0, turns=0.5)
    slow = build_sample(
        [[(p.x, p.y, p.t * 2.0) for p in base.strokes[0].points]]
    )
    m1 = decompose(base)
    m2 = decompose(slow)
    assert m1.n == m2.n
    for s1, s2 in zip(m1.strokes, m2.strokes):
        assert s2.pulse.duration() == pytest.approx(2.0 * s1.pulse.duration(), rel=0.02)
        assert s2.pulse.amplitude == pytest.approx(0.5 * s1.pulse.amplitude, rel=0.02)
        assert s2.arc.semi_major == pytest.approx(s1.arc.semi_major, rel=0.05)
        assert s2.arc.semi_minor == pytest.approx(s1.arc.semi_minor, rel=0.05, abs=0.01)
        assert np.allclose(s1.zones, s2.zones, atol=0.02)


def test_decompose_pen_strokes_one_per_pen_down_unit():
    sample = build_sample(
        [
            [(10.0 + i, 50.0 + 0.2 * i, i / 100.0) for i in range(60)],
            [(20.0 + i, 80.0, i / 100.0 + 0.8) for i in range(60)],
        ]
    )
    model = decompose(sample)
    assert len(model.pen_strokes) == 2
    assert model.n >= 2
