"""Beta-elliptic trajectory decomposition.

The curvilinear velocity profile is segmented at its local minima into
elementary strokes.  Each elementary stroke gets a dynamic description (a
beta-function velocity pulse: amplitude, two shape exponents, start and end
times) and a geometric description (an elliptic arc: semi-axes, axis angle,
tangent angle at the slow endpoint).  Pulses within a pen stroke are refit
jointly so overlapping tails are shared correctly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.sparse import lil_matrix

from hqa.ink import InkSample, zone_fractions
from hqa.preprocess import RESAMPLE_RATE, VelocityProfile, positions_on_grid, velocity_profile

# Fit bounds: shape exponents stay in a well-conditioned range and the
# amplitude cannot run away past the observed peak speed.
EXPONENT_MIN = 0.5
EXPONENT_MAX = 10.0
AMPLITUDE_FACTOR = 3.0
MAX_ITERATIONS = 200
FIT_TOLERANCE = 1e-6

# Degenerate-arc floor keeps semi-axis ratios finite on collinear spans.
MIN_SEMI_MINOR = 1e-3

# Span consolidation: a minimum only delimits strokes when the dip is
# pronounced and both sides are long enough to describe a stroke.
MERGE_DIP_RATIO = 0.6
DEEP_DIP_RATIO = 0.35
MIN_SPAN_POINTS = 8
MIN_FRAGMENT_POINTS = 5
LOW_PEAK_RATIO = 0.15

# Feature layout used for stroke comparison.  The first nine dimensions are
# the dynamic and geometric stroke parameters; the last three are the
# stroke's reference-line zone occupancy (used by the position criterion).
FEATURE_NAMES = (
    "amplitude",
    "rise_exponent",
    "fall_exponent",
    "rise_duration",
    "fall_duration",
    "semi_major",
    "semi_minor",
    "axis_angle",
    "tangent_angle",
    "zone_upper",
    "zone_median",
    "zone_lower",
)
BASE_FEATURE_DIM = 9
FEATURE_DIM = 12


@dataclass(frozen=True)
class BetaPulse:
    """Parameters of one beta velocity pulse.

    The pulse rises from zero at `start`, peaks with value `amplitude` at
    `peak_time`, and falls back to zero at `end`.
    """

    amplitude: float
    rise_exponent: float
    fall_exponent: float
    start: float
    end: float

    @property
    def peak_time(self) -> float:
        p = self.rise_exponent
        q = self.fall_exponent
        return (p * self.end + q * self.start) / (p + q)

    def duration(self) -> float:
        return self.end - self.start


def beta_pulse(t, pulse: BetaPulse) -> np.ndarray:
    """Evaluate a beta pulse; zero outside [start, end]."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    tc = pulse.peak_time
    mask = (t >= pulse.start) & (t <= pulse.end)
    tm = t[mask]
    rise = np.clip((tm - pulse.start) / (tc - pulse.start), 0.0, None)
    fall = np.clip((pulse.end - tm) / (pulse.end - tc), 0.0, None)
    out[mask] = pulse.amplitude * rise**pulse.rise_exponent * fall**pulse.fall_exponent
    return out


@dataclass(frozen=True)
class EllipticArc:
    """Geometric description of one elementary stroke."""

    semi_major: float
    semi_minor: float
    axis_angle: float
    tangent_angle: float


@dataclass(frozen=True)
class BetaStroke:
    """One elementary stroke: dynamics, geometry and its grid span."""

    pulse: BetaPulse
    arc: EllipticArc
    span: tuple[int, int]
    start_point: tuple[float, float]
    end_point: tuple[float, float]
    arc_length: float = 0.0
    pen_fraction: float = 1.0
    zones: tuple[float, float, float] = (0.0, 1.0, 0.0)
    degenerate: bool = False
    converged: bool = True

    @property
    def displacement_angle(self) -> float:
        dx = self.end_point[0] - self.start_point[0]
        dy = self.end_point[1] - self.start_point[1]
        if math.hypot(dx, dy) < 1e-9:
            return self.arc.tangent_angle
        return math.atan2(dy, dx)

    def features(self) -> np.ndarray:
        p = self.pulse
        a = self.arc
        tc = p.peak_time
        return np.array(
            [
                p.amplitude,
                p.rise_exponent,
                p.fall_exponent,
                tc - p.start,
                p.end - tc,
                a.semi_major,
                a.semi_minor,
                a.axis_angle,
                a.tangent_angle,
                self.zones[0],
                self.zones[1],
                self.zones[2],
            ]
        )


@dataclass(frozen=True)
class BetaEllipticModel:
    """Ordered elementary strokes of a sample plus the fit residual.

    `strokes` are the velocity-segmented elementary strokes; `pen_strokes`
    carry one fit per pen-down unit regardless of how the speed profile
    segments, for comparisons about the sequence of strokes rather than
    their internal dynamics.
    """

    strokes: tuple[BetaStroke, ...]
    rmse: float
    converged: bool
    pen_strokes: tuple[BetaStroke, ...] = ()

    @property
    def n(self) -> int:
        return len(self.strokes)

    def feature_matrix(self, include_degenerate: bool = False) -> np.ndarray:
        rows = [s.features() for s in self.strokes if include_degenerate or not s.degenerate]
        if not rows:
            return np.zeros((0, FEATURE_DIM))
        return np.stack(rows, axis=0)


def local_minima(v: np.ndarray) -> list[int]:
    """Interior indices i with v[i-1] > v[i] <= v[i+1] (plateau collapses left)."""
    v = np.asarray(v, dtype=float)
    return [i for i in range(1, len(v) - 1) if v[i - 1] > v[i] <= v[i + 1]]


def segment_spans(profile: VelocityProfile) -> list[tuple[int, int]]:
    """Elementary-stroke spans: pen-stroke ranges split at speed minima.

    Every pen-down/pen-up transition is a boundary; a constant profile
    yields a single span per pen stroke.
    """
    spans = []
    for i0, i1 in profile.stroke_spans:
        interior = [i0 + j for j in local_minima(profile.v[i0 : i1 + 1])]
        edges = [i0] + interior + [i1]
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a:
                spans.append((a, b))
        if i1 == i0:
            spans.append((i0, i1))
    return spans


def consolidate_spans(
    profile: VelocityProfile,
    spans: list[tuple[int, int]],
) -> list[tuple[int, int]]:
    """Merge spurious spans into their neighbours.

    Sampling noise near stroke onsets produces very short spans, and gentle
    curves produce shallow speed dips that split inconsistently from one
    repetition of a symbol to the next.  A boundary between two spans of
    the same pen stroke survives according to how far the speed falls at
    the boundary relative to the smaller neighbouring peak: shallow dips
    always merge, moderate dips merge when either side is too short to
    describe a stroke, and deep dips are genuine halts that only merge
    away sliver fragments.  Pen-up boundaries are never merged.
    """
    spans = list(spans)
    merged = True
    while merged:
        merged = False
        for k in range(len(spans) - 1):
            a, b = spans[k], spans[k + 1]
            if a[1] != b[0]:
                continue
            peak_a = float(np.max(profile.v[a[0] : a[1] + 1]))
            peak_b = float(np.max(profile.v[b[0] : b[1] + 1]))
            ratio = profile.v[a[1]] / max(min(peak_a, peak_b), 1e-12)
            shortest = min(a[1] - a[0] + 1, b[1] - b[0] + 1)
            # a side whose peak is dwarfed by its neighbour is a pen-down
            # or pen-up transient, not a stroke of its own
            bump = min(peak_a, peak_b) < LOW_PEAK_RATIO * max(peak_a, peak_b)
            if ratio > MERGE_DIP_RATIO:
                do_merge = True
            elif ratio > DEEP_DIP_RATIO:
                do_merge = shortest < MIN_SPAN_POINTS or bump
            else:
                do_merge = shortest < MIN_FRAGMENT_POINTS or bump
            if do_merge:
                spans[k] = (a[0], b[1])
                del spans[k + 1]
                merged = True
                break
    return spans


@dataclass(frozen=True)
class PulseFit:
    pulses: tuple[BetaPulse, ...]
    degenerate: tuple[bool, ...]
    rmse: float
    converged: bool


def _initial_pulse(t, v, span):
    i0, i1 = span
    return BetaPulse(
        amplitude=float(np.max(v[i0 : i1 + 1])),
        rise_exponent=2.0,
        fall_exponent=2.0,
        start=float(t[i0]),
        end=float(t[i1]),
    )


def _pulse_group_bounds(t, v, spans):
    x0, lo, hi = [], [], []
    for i0, i1 in spans:
        ta, tb = float(t[i0]), float(t[i1])
        dur = tb - ta
        mid = 0.5 * (ta + tb)
        peak = float(np.max(v[i0 : i1 + 1]))
        x0 += [peak, 2.0, 2.0, ta, tb]
        lo += [1e-9, EXPONENT_MIN, EXPONENT_MIN, ta - 0.5 * dur, mid + 0.02 * dur]
        hi += [AMPLITUDE_FACTOR * peak, EXPONENT_MAX, EXPONENT_MAX, mid - 0.02 * dur, tb + 0.5 * dur]
    return np.array(x0), np.array(lo), np.array(hi)


def _superposition(t, params):
    out = np.zeros_like(t)
    for k in range(len(params) // 5):
        amp, p, q, t0, t1 = params[5 * k : 5 * k + 5]
        out += beta_pulse(t, BetaPulse(amp, p, q, t0, t1))
    return out


def fit_pulses(profile: VelocityProfile, spans: list[tuple[int, int]]) -> PulseFit:
    """Jointly fit beta pulses to the speed profile over the given spans.

    Per-pulse initialization puts the support at the span boundaries, the
    amplitude at the span peak and both exponents at 2.  Spans with zero
    peak speed are flagged degenerate and kept out of the fit (amplitude 0
    sentinel).  Pulses are refit jointly per pen stroke so overlapping
    tails are shared; if the iteration cap is hit the initialization values
    are returned flagged unconverged.
    """
    t = profile.t
    v = profile.v
    pulses: dict[int, BetaPulse] = {}
    degenerate: dict[int, bool] = {}
    converged_all = True

    # group spans by the pen stroke that contains them
    groups: dict[int, list[int]] = {}
    for idx, (a, b) in enumerate(spans):
        for gi, (i0, i1) in enumerate(profile.stroke_spans):
            if a >= i0 and b <= i1:
                groups.setdefault(gi, []).append(idx)
                break
        else:
            groups.setdefault(-1 - idx, []).append(idx)

    for span_ids in groups.values():
        live = []
        for idx in span_ids:
            init = _initial_pulse(t, v, spans[idx])
            if init.amplitude <= 1e-9 or spans[idx][1] - spans[idx][0] < 1:
                pulses[idx] = BetaPulse(0.0, 2.0, 2.0, init.start, max(init.end, init.start + 1e-6))
                degenerate[idx] = True
                continue
            degenerate[idx] = False
            live.append(idx)
        if not live:
            continue
        lo_idx = min(spans[i][0] for i in live)
        hi_idx = max(spans[i][1] for i in live)
        tt = t[lo_idx : hi_idx + 1]
        vv = v[lo_idx : hi_idx + 1]
        x0, lo, hi = _pulse_group_bounds(t, v, [spans[i] for i in live])

        def residual(params, tt=tt, vv=vv):
            return _superposition(tt, params) - vv

        kwargs = dict(
            bounds=(lo, hi),
            method="trf",
            ftol=FIT_TOLERANCE,
            xtol=1e-7,
            max_nfev=MAX_ITERATIONS * max(1, len(live)),
        )
        if len(live) > 1:
            sparsity = lil_matrix((tt.size, 5 * len(live)), dtype=int)
            for col, idx in enumerate(live):
                i0, i1 = spans[idx]
                dur = t[i1] - t[i0]
                rows = np.where((tt >= t[i0] - 0.5 * dur) & (tt <= t[i1] + 0.5 * dur))[0]
                sparsity[rows, 5 * col : 5 * col + 5] = 1
            kwargs.update(jac_sparsity=sparsity.tocsr(), tr_solver="lsmr")
        try:
            result = least_squares(residual, x0, **kwargs)
            params = result.x
            ok = result.status > 0
        except Exception:
            params = x0
            ok = False
        if not ok:
            params = x0
            converged_all = False
        for col, idx in enumerate(live):
            amp, p, q, t0, t1 = params[5 * col : 5 * col + 5]
            pulses[idx] = BetaPulse(float(amp), float(p), float(q), float(t0), float(t1))

    ordered = tuple(pulses[i] for i in range(len(spans)))
    degen = tuple(degenerate[i] for i in range(len(spans)))
    model = np.zeros_like(v)
    for pulse, dg in zip(ordered, degen):
        if not dg:
            model += beta_pulse(t, pulse)
    rmse = float(np.sqrt(np.mean((model - v) ** 2))) if v.size else 0.0
    return PulseFit(pulses=ordered, degenerate=degen, rmse=rmse, converged=converged_all)


def _geometric_params(conic):
    A, B, C, D, E, F = conic
    den = B * B - 4 * A * C
    if den >= 0:
        return None
    cx = (2 * C * D - B * E) / den
    cy = (2 * A * E - B * D) / den
    num = 2 * (A * E * E + C * D * D + F * B * B - B * D * E - 4 * A * C * F)
    root = math.sqrt((A - C) ** 2 + B * B)
    try:
        a = -math.sqrt(num * (A + C + root)) / den
        b = -math.sqrt(num * (A + C - root)) / den
    except ValueError:
        return None
    theta = 0.5 * math.atan2(-B, C - A)
    if a < b:
        a, b = b, a
        theta += math.pi / 2
    theta = (theta + math.pi / 2) % math.pi - math.pi / 2
    return a, b, theta, (cx, cy)


def _fit_conic(points, endpoint_weight=5.0):
    """Direct ellipse-specific conic fit (Halir-Flusser) with endpoint weighting."""
    pts = np.asarray(points, dtype=float)
    w = np.ones(len(pts))
    w[0] = w[-1] = endpoint_weight
    x = pts[:, 0]
    y = pts[:, 1]
    d1 = np.stack([x * x, x * y, y * y], axis=1) * w[:, None]
    d2 = np.stack([x, y, np.ones_like(x)], axis=1) * w[:, None]
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    tmat = -np.linalg.solve(s3, s2.T)
    m = s1 + s2 @ tmat
    cons = np.array([[0.0, 0.0, 2.0], [0.0, -1.0, 0.0], [2.0, 0.0, 0.0]])
    eigvals, eigvecs = np.linalg.eig(np.linalg.solve(cons, m))
    best = None
    for i in range(3):
        vec = np.real(eigvecs[:, i])
        cond = 4 * vec[0] * vec[2] - vec[1] ** 2
        if cond > 0:
            best = vec / math.sqrt(cond)
            break
    if best is None:
        return None
    rest = tmat @ best
    return np.concatenate([best, rest])


def _tangent_angle(points, speeds):
    """Directed tangent inclination at the slower span endpoint."""
    pts = np.asarray(points, dtype=float)
    if speeds[0] <= speeds[-1]:
        d = pts[1] - pts[0]
    else:
        d = pts[-1] - pts[-2]
    if np.hypot(d[0], d[1]) < 1e-12:
        mid = pts[-1] - pts[0]
        return math.atan2(mid[1], mid[0]) if np.hypot(*mid) > 0 else 0.0
    return math.atan2(d[1], d[0])


def fit_arc(points: np.ndarray, speeds: np.ndarray) -> EllipticArc:
    """Elliptic-arc parameters of one stroke span.

    Falls back to a chord description (semi-major = half chord, flat minor
    axis) when the points are near-collinear or no valid ellipse exists.
    """
    pts = np.asarray(points, dtype=float)
    chord = pts[-1] - pts[0]
    half_chord = 0.5 * float(np.hypot(chord[0], chord[1]))
    tangent = _tangent_angle(pts, np.asarray(speeds, dtype=float))

    def fallback():
        extent = max(half_chord, MIN_SEMI_MINOR)
        incl = math.atan2(chord[1], chord[0]) if half_chord > 0 else tangent
        incl = (incl + math.pi / 2) % math.pi - math.pi / 2
        return EllipticArc(extent, MIN_SEMI_MINOR, incl, tangent)

    if len(pts) < 5:
        return fallback()
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] < 1e-12 or sv[-1] / sv[0] < 1e-4:
        return fallback()
    try:
        conic = _fit_conic(pts)
    except np.linalg.LinAlgError:
        return fallback()
    if conic is None:
        return fallback()
    geom = _geometric_params(conic)
    if geom is None:
        return fallback()
    a, b, theta, _center = geom
    if not (math.isfinite(a) and math.isfinite(b)) or a > 50.0 * max(half_chord, 1e-6):
        return fallback()
    return EllipticArc(max(a, MIN_SEMI_MINOR), max(b, MIN_SEMI_MINOR), theta, tangent)


def _assemble_strokes(
    sample: InkSample,
    profile: VelocityProfile,
    spans: list[tuple[int, int]],
    fit: PulseFit,
    stroke_points: list[np.ndarray],
    pen_lengths: list[float],
    total_ink: float,
) -> list[BetaStroke]:
    strokes = []
    for idx, (i0, i1) in enumerate(spans):
        for si, (s0, s1) in enumerate(profile.stroke_spans):
            if i0 >= s0 and i1 <= s1:
                pts = stroke_points[si][i0 - s0 : i1 - s0 + 1]
                pen_frac = pen_lengths[si] / total_ink
                break
        else:
            pts = np.zeros((2, 2))
            pen_frac = 0.0
        speeds = profile.v[i0 : i1 + 1]
        if len(pts) >= 2:
            arc = fit_arc(pts, speeds)
            zones = tuple(zone_fractions(pts[:, 1], sample.guidelines))
            start_pt = (float(pts[0, 0]), float(pts[0, 1]))
            end_pt = (float(pts[-1, 0]), float(pts[-1, 1]))
            alen = float(np.hypot(*np.diff(pts, axis=0).T).sum())
        else:
            arc = EllipticArc(MIN_SEMI_MINOR, MIN_SEMI_MINOR, 0.0, 0.0)
            zones = (0.0, 1.0, 0.0)
            start_pt = end_pt = (0.0, 0.0)
            alen = 0.0
        strokes.append(
            BetaStroke(
                pulse=fit.pulses[idx],
                arc=arc,
                span=(i0, i1),
                start_point=start_pt,
                end_point=end_pt,
                arc_length=alen,
                pen_fraction=pen_frac,
                zones=zones,
                degenerate=fit.degenerate[idx],
                converged=fit.converged,
            )
        )
    return strokes


def decompose(sample: InkSample, rate: float = RESAMPLE_RATE) -> BetaEllipticModel:
    """Full beta-elliptic decomposition of a preprocessed sample."""
    profile = velocity_profile(sample, rate)
    spans = consolidate_spans(profile, segment_spans(profile))
    fit = fit_pulses(profile, spans)
    stroke_points = positions_on_grid(sample, profile)
    pen_lengths = [
        float(np.hypot(*np.diff(p, axis=0).T).sum()) if len(p) >= 2 else 0.0
        for p in stroke_points
    ]
    total_ink = sum(pen_lengths) or 1.0

    strokes = _assemble_strokes(
        sample, profile, spans, fit, stroke_points, pen_lengths, total_ink
    )
    # one fit per pen-down unit; a stroke whose consolidated span already
    # covers the whole unit was fitted alone above, so its pulse is reused
    # rather than refit
    pen_spans = [tuple(s) for s in profile.stroke_spans]
    span_list = [tuple(s) for s in spans]
    pen_pulses = []
    pen_degen = []
    pen_ok = fit.converged
    for ps in pen_spans:
        if ps in span_list:
            idx = span_list.index(ps)
            pen_pulses.append(fit.pulses[idx])
            pen_degen.append(fit.degenerate[idx])
        else:
            sub = fit_pulses(profile, [ps])
            pen_pulses.append(sub.pulses[0])
            pen_degen.append(sub.degenerate[0])
            pen_ok = pen_ok and sub.converged
    pen_fit = PulseFit(
        pulses=tuple(pen_pulses),
        degenerate=tuple(pen_degen),
        rmse=fit.rmse,
        converged=pen_ok,
    )
    pen_strokes = _assemble_strokes(
        sample, profile, pen_spans, pen_fit, stroke_points, pen_lengths, total_ink
    )
    return BetaEllipticModel(
        strokes=tuple(strokes),
        rmse=fit.rmse,
        converged=fit.converged,
        pen_strokes=tuple(pen_strokes),
    )
