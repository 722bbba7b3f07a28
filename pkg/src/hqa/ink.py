"""Core ink data types, reference-line zones and the on-disk sample format.

An ink sample is an ordered list of pen-down strokes (timestamped points),
carried together with the guideline geometry it was written on.  The y axis
grows downward (screen convention), so the Lower zone is y > baseline_y.
All types are immutable values; operations return new samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

SCRIPTS = ("arabic_char", "arabic_word", "latin_char", "digit", "symbol")

FORMAT_VERSION = 1


class InkFormatError(ValueError):
    """Raised for malformed ink documents.

    Carries the offending stroke/point indices when the error is local to a
    point, so callers can surface precise feedback.
    """

    def __init__(self, message, stroke=None, point=None):
        if stroke is not None and point is not None:
            message = f"{message} (stroke {stroke}, point {point})"
        elif stroke is not None:
            message = f"{message} (stroke {stroke})"
        super().__init__(message)
        self.stroke = stroke
        self.point = point


class Zone(Enum):
    UPPER = "upper"
    MEDIAN = "median"
    LOWER = "lower"


@dataclass(frozen=True)
class InkPoint:
    """One trajectory sample: position in device units, time in seconds."""

    x: float
    y: float
    t: float


@dataclass(frozen=True)
class PenStroke:
    """One continuous pen-down segment."""

    points: tuple[InkPoint, ...]

    def __len__(self):
        return len(self.points)

    def xy(self) -> np.ndarray:
        """Positions as an (n, 2) float array."""
        return np.array([(p.x, p.y) for p in self.points], dtype=float)

    def times(self) -> np.ndarray:
        return np.array([p.t for p in self.points], dtype=float)

    @staticmethod
    def from_arrays(xy: np.ndarray, times: np.ndarray) -> "PenStroke":
        pts = tuple(
            InkPoint(float(x), float(y), float(t)) for (x, y), t in zip(np.asarray(xy), np.asarray(times))
        )
        return PenStroke(pts)


@dataclass(frozen=True)
class RefLines:
    """Guideline geometry: the median band lies between the two lines.

    median_top_y < baseline_y because y grows downward.
    """

    baseline_y: float
    median_top_y: float

    def __post_init__(self):
        if not (math.isfinite(self.baseline_y) and math.isfinite(self.median_top_y)):
            raise InkFormatError("guideline coordinates must be finite")
        if not self.median_top_y < self.baseline_y:
            raise InkFormatError(
                f"median_top_y ({self.median_top_y}) must be above baseline_y ({self.baseline_y})"
            )


@dataclass(frozen=True)
class SampleMeta:
    script: str
    target: str
    writer_id: str | None = None

    def __post_init__(self):
        if self.script not in SCRIPTS:
            raise InkFormatError(f"unknown script {self.script!r}; expected one of {SCRIPTS}")


@dataclass(frozen=True)
class InkSample:
    """A recorded drawing: ordered strokes plus guidelines and target metadata.

    Stroke order preserves acquisition order; the order criterion depends
    on it.
    """

    strokes: tuple[PenStroke, ...]
    guidelines: RefLines
    meta: SampleMeta

    def __post_init__(self):
        if len(self.strokes) == 0:
            raise InkFormatError("sample must contain at least one stroke")

    def point_count(self) -> int:
        return sum(len(s) for s in self.strokes)

    def all_xy(self) -> np.ndarray:
        return np.concatenate([s.xy() for s in self.strokes], axis=0)

    def bounds(self) -> tuple[float, float, float, float]:
        """(min_x, min_y, max_x, max_y) over all strokes."""
        xy = self.all_xy()
        mn = xy.min(axis=0)
        mx = xy.max(axis=0)
        return float(mn[0]), float(mn[1]), float(mx[0]), float(mx[1])

    def with_strokes(self, strokes: Iterable[PenStroke]) -> "InkSample":
        return replace(self, strokes=tuple(strokes))


@dataclass(frozen=True)
class ZoneHistogram:
    """Fraction of trajectory points per reference-line zone; sums to 1."""

    upper: float
    median: float
    lower: float

    def as_array(self) -> np.ndarray:
        return np.array([self.upper, self.median, self.lower], dtype=float)


def zone_of(point: InkPoint, lines: RefLines) -> Zone:
    """Zone of a point; boundary points belong to the (closed) median band."""
    if point.y < lines.median_top_y:
        return Zone.UPPER
    if point.y > lines.baseline_y:
        return Zone.LOWER
    return Zone.MEDIAN


def zone_fractions(ys: np.ndarray, lines: RefLines) -> np.ndarray:
    """Zone point-count fractions (upper, median, lower) of an array of y values."""
    ys = np.asarray(ys, dtype=float)
    n = ys.size
    if n == 0:
        raise ValueError("empty point set")
    upper = int(np.count_nonzero(ys < lines.median_top_y))
    lower = int(np.count_nonzero(ys > lines.baseline_y))
    median = n - upper - lower
    return np.array([upper, median, lower], dtype=float) / n


def zone_histogram(sample: InkSample) -> ZoneHistogram:
    """Per-zone point-count fractions over all strokes of the sample."""
    ys = np.concatenate([s.xy()[:, 1] for s in sample.strokes])
    u, m, low = zone_fractions(ys, sample.guidelines)
    return ZoneHistogram(float(u), float(m), float(low))


def _require(cond: bool, message: str, stroke=None, point=None):
    if not cond:
        raise InkFormatError(message, stroke=stroke, point=point)


def _as_finite_number(value, name, stroke=None, point=None) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             f"{name} must be a number", stroke, point)
    v = float(value)
    _require(math.isfinite(v), f"{name} must be finite", stroke, point)
    return v


def sample_from_document(doc: dict) -> InkSample:
    """Build an InkSample from a parsed ink document (the HTTP body shape)."""
    _require(isinstance(doc, dict), "ink document must be a JSON object")
    version = doc.get("version")
    _require(version == FORMAT_VERSION, f"unsupported ink format version {version!r}")
    for key in ("script", "target", "guidelines", "strokes"):
        _require(key in doc, f"missing required field {key!r}")
    _require(isinstance(doc["script"], str), "script must be a string")
    _require(isinstance(doc["target"], str), "target must be a string")
    g = doc["guidelines"]
    _require(isinstance(g, dict) and "baseline_y" in g and "median_top_y" in g,
             "guidelines must carry baseline_y and median_top_y")
    lines = RefLines(
        baseline_y=_as_finite_number(g["baseline_y"], "baseline_y"),
        median_top_y=_as_finite_number(g["median_top_y"], "median_top_y"),
    )
    raw_strokes = doc["strokes"]
    _require(isinstance(raw_strokes, list) and len(raw_strokes) > 0,
             "strokes must be a non-empty list")
    strokes = []
    for si, raw in enumerate(raw_strokes):
        _require(isinstance(raw, list) and len(raw) >= 2,
                 "stroke must be a list of at least 2 points", stroke=si)
        pts = []
        prev_t = None
        for pi, rp in enumerate(raw):
            _require(isinstance(rp, dict), "point must be an object", si, pi)
            for key in ("x", "y", "t"):
                _require(key in rp, f"point missing field {key!r}", si, pi)
            x = _as_finite_number(rp["x"], "x", si, pi)
            y = _as_finite_number(rp["y"], "y", si, pi)
            t = _as_finite_number(rp["t"], "t", si, pi)
            if prev_t is not None:
                _require(t > prev_t, f"time not strictly increasing ({t} after {prev_t})", si, pi)
            prev_t = t
            pts.append(InkPoint(x, y, t))
        strokes.append(PenStroke(tuple(pts)))
    meta = SampleMeta(
        script=doc["script"],
        target=doc["target"],
        writer_id=doc.get("writer_id"),
    )
    return InkSample(strokes=tuple(strokes), guidelines=lines, meta=meta)


def sample_to_document(sample: InkSample) -> dict:
    """Ink document of a sample, matching the on-disk / HTTP shape."""
    doc = {
        "version": FORMAT_VERSION,
        "script": sample.meta.script,
        "target": sample.meta.target,
        "guidelines": {
            "baseline_y": sample.guidelines.baseline_y,
            "median_top_y": sample.guidelines.median_top_y,
        },
        "strokes": [
            [{"x": p.x, "y": p.y, "t": p.t} for p in stroke.points]
            for stroke in sample.strokes
        ],
    }
    if sample.meta.writer_id is not None:
        doc["writer_id"] = sample.meta.writer_id
    return doc


def read_sample(data: bytes | str) -> InkSample:
    """Parse a UTF-8 JSON ink document into an InkSample."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InkFormatError(f"malformed ink document: {exc}") from exc
    return sample_from_document(doc)


def write_sample(sample: InkSample) -> bytes:
    """Serialize a sample to its canonical UTF-8 JSON document."""
    text = json.dumps(sample_to_document(sample), sort_keys=True, indent=2) + "\n"
    return text.encode("utf-8")
