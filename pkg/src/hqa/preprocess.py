"""Denoising, resampling, size normalization and velocity profiles.

Pipeline order: resample to a uniform rate, low-pass filter (noise is a
time-domain property), then normalize size.  The low-pass is a Chebyshev
type II design, cutoff 10 Hz, applied forward-backward for zero phase.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal

from hqa.ink import InkSample, PenStroke, RefLines

RESAMPLE_RATE = 100.0  # samples/s; gives the 10 Hz cutoff a clean 0.2 normalized edge

FILTER_ORDER = 4
FILTER_STOPBAND_DB = 40.0
FILTER_CUTOFF_HZ = 10.0

TARGET_HEIGHT = 128.0


class PreprocessError(ValueError):
    pass


@dataclass(frozen=True)
class VelocityProfile:
    """Curvilinear speed on a uniform time grid.

    v is zero on pen-up gaps; stroke_spans maps each pen stroke to its
    inclusive (start, stop) index range on the grid.
    """

    t: np.ndarray
    v: np.ndarray
    stroke_spans: tuple[tuple[int, int], ...]

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0


def resample_uniform(sample: InkSample, rate: float = RESAMPLE_RATE) -> InkSample:
    """Resample every stroke onto a uniform time grid at roughly `rate`.

    The sample count per stroke is the nearest integer to duration*rate, so
    stroke endpoints are preserved exactly; positions are linearly
    interpolated in between.
    """
    if rate <= 0:
        raise PreprocessError("rate must be positive")
    out = []
    for si, stroke in enumerate(sample.strokes):
        times = stroke.times()
        duration = times[-1] - times[0]
        if duration <= 0:
            raise PreprocessError(f"stroke {si} has zero duration")
        segments = max(1, int(round(duration * rate)))
        grid = np.linspace(times[0], times[-1], segments + 1)
        xy = stroke.xy()
        x = np.interp(grid, times, xy[:, 0])
        y = np.interp(grid, times, xy[:, 1])
        out.append(PenStroke.from_arrays(np.stack([x, y], axis=1), grid))
    return sample.with_strokes(out)


def _design_lowpass(rate: float):
    return signal.cheby2(
        FILTER_ORDER, FILTER_STOPBAND_DB, FILTER_CUTOFF_HZ, btype="low", fs=rate, output="sos"
    )


def lowpass(sample: InkSample, rate: float = RESAMPLE_RATE) -> InkSample:
    """Zero-phase Chebyshev-II low-pass on each stroke's x(t) and y(t).

    Strokes shorter than the filter warm-up length pass through unfiltered
    (reported as a warning).  Stroke endpoints are clamped to their original
    positions after filtering.
    """
    sos = _design_lowpass(rate)
    # sosfiltfilt pads by edge reflection; this is its minimum usable length
    padlen = 3 * (2 * sos.shape[0] + 1 - min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum()))
    out = []
    for si, stroke in enumerate(sample.strokes):
        xy = stroke.xy()
        if len(stroke) <= padlen:
            warnings.warn(f"stroke {si} too short to filter ({len(stroke)} points); passed through")
            out.append(stroke)
            continue
        filtered = np.stack(
            [signal.sosfiltfilt(sos, xy[:, 0]), signal.sosfiltfilt(sos, xy[:, 1])], axis=1
        )
        filtered[0] = xy[0]
        filtered[-1] = xy[-1]
        out.append(PenStroke.from_arrays(filtered, stroke.times()))
    return sample.with_strokes(out)


def normalize_size(sample: InkSample, height: float = TARGET_HEIGHT) -> InkSample:
    """Scale uniformly so the bounding-box height equals `height`.

    The aspect ratio is kept; the guidelines undergo the same transform, and
    the bounding-box top-left lands at the origin.  A zero-height sample
    falls back to width-based scaling.
    """
    min_x, min_y, max_x, max_y = sample.bounds()
    span_y = max_y - min_y
    span_x = max_x - min_x
    if span_y > 0:
        scale = height / span_y
    elif span_x > 0:
        scale = height / span_x
    else:
        raise PreprocessError("degenerate sample: zero width and height")
    out = []
    for stroke in sample.strokes:
        xy = stroke.xy()
        xy[:, 0] = (xy[:, 0] - min_x) * scale
        xy[:, 1] = (xy[:, 1] - min_y) * scale
        out.append(PenStroke.from_arrays(xy, stroke.times()))
    lines = RefLines(
        baseline_y=(sample.guidelines.baseline_y - min_y) * scale,
        median_top_y=(sample.guidelines.median_top_y - min_y) * scale,
    )
    return InkSample(strokes=tuple(out), guidelines=lines, meta=sample.meta)


def preprocess(sample: InkSample, rate: float = RESAMPLE_RATE, height: float = TARGET_HEIGHT) -> InkSample:
    """Full preprocessing chain: resample, filter, normalize."""
    return normalize_size(lowpass(resample_uniform(sample, rate), rate), height)


def _stroke_speeds(stroke: PenStroke) -> tuple[np.ndarray, np.ndarray]:
    """Speed samples of one stroke: central differences inside, one-sided at ends."""
    xy = stroke.xy()
    times = stroke.times()
    vx = np.gradient(xy[:, 0], times)
    vy = np.gradient(xy[:, 1], times)
    return times, np.hypot(vx, vy)


def velocity_profile(sample: InkSample, rate: float = RESAMPLE_RATE) -> VelocityProfile:
    """Curvilinear speed on a single uniform grid spanning the whole sample.

    Grid points inside a stroke carry that stroke's speed (interpolated from
    its finite differences); points in pen-up gaps carry zero.
    """
    if rate <= 0:
        raise PreprocessError("rate must be positive")
    step = 1.0 / rate
    t_first = sample.strokes[0].times()[0]
    t_last = sample.strokes[-1].times()[-1]
    n = int(round((t_last - t_first) * rate)) + 1
    grid = t_first + np.arange(n) * step
    v = np.zeros(n)
    spans = []
    for stroke in sample.strokes:
        times, speeds = _stroke_speeds(stroke)
        i0 = int(np.ceil((times[0] - t_first) * rate - 1e-9))
        i1 = int(np.floor((times[-1] - t_first) * rate + 1e-9))
        i0 = max(i0, 0)
        i1 = min(i1, n - 1)
        if i1 < i0:
            i0 = i1 = min(max(int(round((times[0] - t_first) * rate)), 0), n - 1)
        v[i0 : i1 + 1] = np.interp(grid[i0 : i1 + 1], times, speeds)
        spans.append((i0, i1))
    return VelocityProfile(t=grid, v=v, stroke_spans=tuple(spans))


def positions_on_grid(sample: InkSample, profile: VelocityProfile) -> list[np.ndarray]:
    """Per-stroke positions interpolated at the profile's grid times."""
    out = []
    for stroke, (i0, i1) in zip(sample.strokes, profile.stroke_spans):
        times = stroke.times()
        xy = stroke.xy()
        grid = profile.t[i0 : i1 + 1]
        x = np.interp(grid, times, xy[:, 0])
        y = np.interp(grid, times, xy[:, 1])
        out.append(np.stack([x, y], axis=1))
    return out
