"""Score normalization, fusion, global verdict and qualitative labels.

Distances become scores through two empirically calibrated thresholds: a
certainly-correct bound below which the score saturates at 1 and a
certainly-wrong bound above which it drops to 0, linear in between.  A
twin score measured against the wrong-exemplar set is folded in as its
complement, engines are fused by their validation classification rates,
and the five criterion scores pick the global verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CRITERIA = ("shape", "direction", "order", "kinematic", "position")

# engines feeding each criterion
ENGINE_ASSIGNMENTS = {
    "shape": ("bem", "fdm", "shape"),
    "direction": ("bem", "fdm"),
    "order": ("bem", "fdm"),
    "kinematic": ("bem",),
    "position": ("bem", "shape"),
}

CLASS_LABELS = {
    1: "correct",
    2: "wrong_shape",
    3: "wrong_order",
    4: "wrong_direction",
    5: "line_surpass",
    6: "irregular_kinematics",
}

# operand rank in the verdict argmax -> class index
OPERAND_CLASS = {1: 1, 2: 4, 3: 3, 4: 6, 5: 5}

SHAPE_FLOOR = 0.5
U_MAX = 0.96
U_MIN = 0.04

QUAL_LABELS = ("VB", "B", "M", "W", "VW")
QUAL_PEAKS = (10.0, 30.0, 50.0, 70.0, 90.0)
QUAL_HALF_WIDTH = 20.0


def quantile(values, u: float) -> float:
    """Linear-interpolation quantile of a sample."""
    arr = np.sort(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("empty distribution")
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must be in [0, 1]")
    h = u * (arr.size - 1)
    lo = int(np.floor(h))
    hi = min(lo + 1, arr.size - 1)
    return float(arr[lo] + (h - lo) * (arr[hi] - arr[lo]))


@dataclass(frozen=True)
class Thresholds:
    t_cc: float
    t_cw: float

    def __post_init__(self):
        if self.t_cc > self.t_cw:
            raise ValueError("t_cc must not exceed t_cw")


def compute_thresholds(dd_correct, dd_wrong, u_max: float = U_MAX, u_min: float = U_MIN) -> Thresholds:
    """Certainly-correct / certainly-wrong bounds from the two DD samples."""
    q_c = quantile(dd_correct, u_max)
    q_w = quantile(dd_wrong, u_min)
    return Thresholds(t_cc=min(q_c, q_w), t_cw=max(q_c, q_w))


def ns1(dd: float, th: Thresholds) -> float:
    """Piecewise-linear score: 1 below t_cc, 0 above t_cw."""
    if th.t_cc == th.t_cw:
        return 1.0 if dd <= th.t_cc else 0.0
    if dd < th.t_cc:
        return 1.0
    if dd > th.t_cw:
        return 0.0
    return (th.t_cw - dd) / (th.t_cw - th.t_cc)


def combined_score(ns1_value: float, ns2_value: float) -> float:
    """Blend of closeness to the correct set and distance from the wrong set."""
    return 0.5 * (ns1_value + (1.0 - ns2_value))


def fuse(per_engine_scores: dict[str, float], weights: dict[str, float]) -> float:
    """Weighted mean of engine scores using their classification rates."""
    if not per_engine_scores:
        raise ValueError("empty engine set")
    num = 0.0
    den = 0.0
    for engine, score in per_engine_scores.items():
        w = weights[engine]
        num += w * score
        den += w
    if den <= 0.0:
        raise ValueError("weights sum to zero")
    return num / den


def classify_global(scores: dict[str, float], shape_floor: float = SHAPE_FLOOR) -> int:
    """Global verdict class from the five criterion scores.

    The winning operand of max{S_shape, 1-S_direction, 1-S_order,
    1-S_kinematic, 1-S_position} names the class; ties go to the lowest
    class index.  A shape score under the floor forces the wrong-shape
    class outright.
    """
    if scores["shape"] < shape_floor:
        return 2
    operands = [
        scores["shape"],
        1.0 - scores["direction"],
        1.0 - scores["order"],
        1.0 - scores["kinematic"],
        1.0 - scores["position"],
    ]
    best = max(operands)
    tied = [OPERAND_CLASS[m + 1] for m, v in enumerate(operands) if v == best]
    return min(tied)


@dataclass(frozen=True)
class QualitativeLabel:
    """Two adjacent fuzzy labels with membership rates summing to one."""

    label1: str
    r1: float
    label2: str
    r2: float

    def as_dict(self) -> dict:
        return {"labels": [self.label1, self.label2], "rates": [self.r1, self.r2]}


def qualitative(score_0_100: float) -> QualitativeLabel:
    """Fuzzy verdict label of a 0-100 score.

    Triangular sets peak at 10/30/50/70/90 with half-width 20; the scale
    saturates below the first and above the last peak.  The two covering
    memberships already sum to one by construction.
    """
    x = float(score_0_100)
    if not 0.0 <= x <= 100.0:
        raise ValueError("score must be in [0, 100]")
    x = min(max(x, QUAL_PEAKS[0]), QUAL_PEAKS[-1])
    pos = (x - QUAL_PEAKS[0]) / QUAL_HALF_WIDTH
    lo = min(int(pos), len(QUAL_PEAKS) - 2)
    frac = pos - lo
    lo_label, hi_label = QUAL_LABELS[lo], QUAL_LABELS[lo + 1]
    lo_rate, hi_rate = 1.0 - frac, frac
    if frac > 0.5:
        return QualitativeLabel(hi_label, hi_rate, lo_label, lo_rate)
    if frac == 0.0:
        return QualitativeLabel(lo_label, 1.0, lo_label, 0.0)
    return QualitativeLabel(lo_label, lo_rate, hi_label, hi_rate)


def accuracy(predicted: float, expected: float) -> float:
    """Agreement between two scores on the unit scale."""
    return 1.0 - abs(predicted - expected)
