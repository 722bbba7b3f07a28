"""Hand-built ink samples used across the test modules."""

import numpy as np

from hqa.ink import InkPoint, InkSample, PenStroke, RefLines, SampleMeta


def build_sample(
    strokes_xyt,
    baseline=100.0,
    median_top=40.0,
    script="symbol",
    target="test",
):
    """InkSample from a list of strokes, each a list of (x, y, t) triples."""
    strokes = tuple(
        PenStroke(tuple(InkPoint(float(x), float(y), float(t)) for x, y, t in pts))
        for pts in strokes_xyt
    )
    return InkSample(
        strokes=strokes,
        guidelines=RefLines(baseline_y=baseline, median_top_y=median_top),
        meta=SampleMeta(script=script, target=target),
    )


def line_sample(n=50, rate=100.0, x0=10.0, y0=60.0, x1=90.0, y1=60.0):
    """Constant-speed straight pen stroke sampled at a uniform rate."""
    ts = np.arange(n) / rate
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    return build_sample([list(zip(xs, ys, ts))])


def circle_sample(n=200, rate=100.0, cx=50.0, cy=60.0, r=30.0, turns=1.0):
    """Counterclockwise-in-ink circle traced at constant angular speed."""
    ts = np.arange(n) / rate
    ang = 2.0 * np.pi * turns * np.arange(n) / (n - 1)
    xs = cx + r * np.cos(ang)
    ys = cy - r * np.sin(ang)
    return build_sample([list(zip(xs, ys, ts))])
