"""Starter catalog of parametric symbol templates.

Each template lists its strokes as simple parametric curves in guideline
coordinates (baseline at y=100, median-line top at y=40, y growing
downward) together with the canonical drawing direction.  The catalog
covers Arabic letters, Latin capitals, digits and two symbols so the
multi-script claims can be exercised without a real corpus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BASELINE_Y = 100.0
MEDIAN_TOP_Y = 40.0


@dataclass(frozen=True)
class StrokeSpec:
    """One parametric stroke.

    kind "line": params (x0, y0, x1, y1)
    kind "poly": params flat (x0, y0, x1, y1, x2, y2, ...), straight legs
    kind "arc":  params (cx, cy, rx, ry, phi_start_deg, phi_end_deg)
    kind "bezier": params cubic control points (x0, y0, ..., x3, y3)
    """

    kind: str
    params: tuple[float, ...]

    def point(self, u: float | np.ndarray) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        p = self.params
        if self.kind == "line":
            x = p[0] + u * (p[2] - p[0])
            y = p[1] + u * (p[3] - p[1])
        elif self.kind == "poly":
            pts = np.asarray(p, dtype=float).reshape(-1, 2)
            seg = np.hypot(*np.diff(pts, axis=0).T)
            cum = np.concatenate([[0.0], np.cumsum(seg)])
            s = u * cum[-1]
            x = np.interp(s, cum, pts[:, 0])
            y = np.interp(s, cum, pts[:, 1])
        elif self.kind == "arc":
            cx, cy, rx, ry, a0, a1 = p
            phi = np.radians(a0 + u * (a1 - a0))
            x = cx + rx * np.cos(phi)
            y = cy + ry * np.sin(phi)
        elif self.kind == "bezier":
            pts = np.asarray(p, dtype=float).reshape(4, 2)
            w = 1.0 - u
            x = (
                w**3 * pts[0, 0]
                + 3 * w**2 * u * pts[1, 0]
                + 3 * w * u**2 * pts[2, 0]
                + u**3 * pts[3, 0]
            )
            y = (
                w**3 * pts[0, 1]
                + 3 * w**2 * u * pts[1, 1]
                + 3 * w * u**2 * pts[2, 1]
                + u**3 * pts[3, 1]
            )
        else:
            raise ValueError(f"unknown stroke kind: {self.kind!r}")
        return np.stack([x, y], axis=1)

    def control_length(self) -> float:
        pts = self.point(np.linspace(0.0, 1.0, 64))
        return float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))


@dataclass(frozen=True)
class SymbolSpec:
    """A drawable target: id, script family and ordered strokes."""

    target: str
    script: str
    strokes: tuple[StrokeSpec, ...]

    def __post_init__(self):
        if not self.strokes:
            raise ValueError("symbol needs at least one stroke")


def _line(x0, y0, x1, y1):
    return StrokeSpec("line", (x0, y0, x1, y1))


def _poly(*coords):
    return StrokeSpec("poly", tuple(coords))


def _arc(cx, cy, rx, ry, a0, a1):
    return StrokeSpec("arc", (cx, cy, rx, ry, a0, a1))


def _bezier(*coords):
    return StrokeSpec("bezier", tuple(coords))


STARTER_SPECS: tuple[SymbolSpec, ...] = (
    # Arabic letters (simplified shapes, dots as short ticks); bodies rest
    # on the baseline so reference-line errors actually cross it
    SymbolSpec("nun", "arabic_char", (
        _arc(50, 68, 25, 30, 180, 0),
        _line(47, 52, 53, 52),
    )),
    SymbolSpec("ta", "arabic_char", (
        _arc(50, 73, 30, 25, 180, 0),
        _line(39, 56, 45, 56),
        _line(55, 56, 61, 56),
    )),
    SymbolSpec("kha", "arabic_char", (
        _bezier(65, 55, 25, 55, 25, 100, 65, 97),
        _line(48, 43, 54, 43),
    )),
    SymbolSpec("tah", "arabic_char", (
        _arc(45, 84, 22, 14, 20, 340),
        _line(70, 28, 70, 98),
    )),
    SymbolSpec("dal", "arabic_char", (
        _bezier(58, 40, 76, 52, 74, 94, 30, 98),
    )),
    SymbolSpec("ra", "arabic_char", (
        _bezier(60, 45, 68, 62, 60, 92, 35, 98),
    )),
    # Latin capitals
    SymbolSpec("A", "latin_char", (
        _line(30, 98, 50, 30),
        _line(50, 30, 70, 98),
        _line(38, 71, 62, 71),
    )),
    SymbolSpec("E", "latin_char", (
        _poly(65, 32, 35, 32, 35, 98, 65, 98),
        _line(35, 64, 60, 64),
    )),
    SymbolSpec("F", "latin_char", (
        _line(35, 98, 35, 32),
        _line(35, 32, 65, 32),
        _line(35, 60, 58, 60),
    )),
    SymbolSpec("H", "latin_char", (
        _line(32, 30, 32, 98),
        _line(68, 30, 68, 98),
        _line(32, 64, 68, 64),
    )),
    SymbolSpec("T", "latin_char", (
        _line(28, 32, 72, 32),
        _line(50, 32, 50, 98),
    )),
    SymbolSpec("L", "latin_char", (
        _line(40, 30, 40, 98),
        _line(40, 98, 70, 98),
    )),
    # digits
    SymbolSpec("four", "digit", (
        _poly(55, 30, 30, 65, 68, 65),
        _line(58, 40, 58, 98),
    )),
    SymbolSpec("five", "digit", (
        _poly(66, 32, 38, 32, 36, 58),
        _bezier(36, 58, 76, 54, 76, 96, 38, 98),
    )),
    SymbolSpec("seven", "digit", (
        _line(30, 34, 70, 34),
        _line(70, 34, 42, 98),
    )),
    # symbols
    SymbolSpec("plus", "symbol", (
        _line(50, 36, 50, 98),
        _line(28, 67, 72, 67),
    )),
    SymbolSpec("dollar", "symbol", (
        _bezier(66, 44, 28, 30, 76, 95, 34, 84),
        _line(50, 32, 50, 98),
    )),
)


def spec_by_target(target: str) -> SymbolSpec:
    for spec in STARTER_SPECS:
        if spec.target == target:
            return spec
    raise KeyError(f"unknown target: {target!r}")
