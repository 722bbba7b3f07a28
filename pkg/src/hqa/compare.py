"""Stroke-sequence comparison: similarity detection, dissimilarity distance.

A test sample's elementary strokes are matched one by one against each
model's strokes inside a small index neighborhood; the best match is the
most cosine-similar stroke under the criterion's feature selector, and its
cost is a per-dimension normalized Euclidean distance.  The directional
pass runs both ways and the result is averaged over all models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import circstd

from hqa.beta_elliptic import FEATURE_DIM, BetaEllipticModel

CRITERIA = ("shape", "direction", "order", "kinematic", "position")

STD_FLOOR = 1e-6
# angle dimensions wrap: axis angle has period pi, tangent heading 2*pi
ANGLE_PERIODS = {7: np.pi, 8: 2.0 * np.pi}
ZONE_DIMS = (9, 10, 11)
ZONE_STD_FLOOR = 0.05
# smallest believable spread per dimension, in feature units; guards the
# z-scores when a writer's repetitions are nearly identical
DIM_STD_FLOORS = {0: 1e-3, 1: 0.05, 2: 0.05, 3: 0.01, 4: 0.01, 5: 0.5, 6: 0.5, 7: 0.05, 8: 0.05}
RELATIVE_STD_FLOOR = 0.1


def _mask(dims) -> np.ndarray:
    w = np.zeros(FEATURE_DIM)
    w[list(dims)] = 1.0
    return w


@dataclass(frozen=True)
class Selector:
    """Per-criterion feature weighting and matching neighborhood."""

    criterion: str
    weights: np.ndarray
    neighborhood: int = 1

    def __post_init__(self):
        if not np.any(self.weights):
            raise ValueError("selector needs at least one nonzero weight")


def default_selectors() -> dict[str, Selector]:
    """Feature subsets per criterion.

    Shape looks at arc geometry, kinematics at pulse dynamics, direction
    at the directed angles, position at geometry plus zone occupancy.
    Order uses the full stroke description with strict same-index
    matching so sequence swaps surface as large distances.
    """
    return {
        "shape": Selector("shape", _mask(range(5, 9))),
        "kinematic": Selector("kinematic", _mask(range(0, 5))),
        "direction": Selector("direction", _mask((7, 8))),
        "order": Selector("order", _mask(range(0, 9)), neighborhood=0),
        "position": Selector("position", _mask((5, 6, 7, 8, 9, 10, 11))),
    }


def _column_stats(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and std; angle dims use circular statistics."""
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    for dim, period in ANGLE_PERIODS.items():
        if dim < rows.shape[1]:
            half = period / 2.0
            std[dim] = float(circstd(rows[:, dim], high=half, low=-half))
            ang = rows[:, dim] * (2.0 * np.pi / period)
            mean[dim] = float(np.arctan2(np.sin(ang).mean(), np.cos(ang).mean())) * period / (2.0 * np.pi)
    return mean, std


def _dim_floors(dim: int, pooled_std: np.ndarray) -> np.ndarray:
    floors = np.full(dim, STD_FLOOR)
    for d, f in DIM_STD_FLOORS.items():
        if d < dim:
            floors[d] = f
    for d in ZONE_DIMS:
        if d < dim:
            floors[d] = ZONE_STD_FLOOR
    return np.maximum(floors, RELATIVE_STD_FLOOR * pooled_std)


@dataclass(frozen=True)
class FeatureStats:
    """Per-dimension normalization constants from the training corpus.

    ``std`` pools every stroke of every repetition.  When the writer's
    repetitions decompose into the same number of strokes, ``index_std``
    holds a much tighter spread per stroke position; pooling a large
    opening stroke with a small final tick would otherwise swamp the
    z-scores of both.
    """

    mean: np.ndarray
    std: np.ndarray
    index_mean: np.ndarray | None = None
    index_std: np.ndarray | None = None

    @classmethod
    def from_rows(cls, rows: np.ndarray) -> "FeatureStats":
        rows = np.asarray(rows, dtype=float)
        mean, std = _column_stats(rows)
        std = np.maximum(std, _dim_floors(rows.shape[1], std))
        return cls(mean=mean, std=std)

    @classmethod
    def from_matrices(cls, matrices: list[np.ndarray]) -> "FeatureStats":
        """Pooled stats plus per-stroke-index stats at the modal stroke count."""
        matrices = [np.asarray(m, dtype=float) for m in matrices if len(m)]
        if not matrices:
            raise ValueError("no stroke matrices")
        pooled = cls.from_rows(np.concatenate(matrices, axis=0))
        counts = [len(m) for m in matrices]
        modal = max(set(counts), key=counts.count)
        aligned = [m for m in matrices if len(m) == modal]
        if len(aligned) < 3:
            return pooled
        stack = np.stack(aligned, axis=0)
        dim = stack.shape[2]
        floors = _dim_floors(dim, pooled.std)
        idx_mean = np.zeros((modal, dim))
        idx_std = np.zeros((modal, dim))
        for k in range(modal):
            m, s = _column_stats(stack[:, k, :])
            idx_mean[k] = m
            idx_std[k] = np.maximum(s, floors)
        return cls(mean=pooled.mean, std=pooled.std, index_mean=idx_mean, index_std=idx_std)

    def sigma(self, index: int | None = None) -> np.ndarray:
        if index is not None and self.index_std is not None and 0 <= index < len(self.index_std):
            return self.index_std[index]
        return self.std

    @classmethod
    def unit(cls, dim: int = FEATURE_DIM) -> "FeatureStats":
        return cls(mean=np.zeros(dim), std=np.ones(dim))


def comparison_features(model: BetaEllipticModel, criterion: str) -> np.ndarray:
    """Stroke feature matrix as seen by one criterion.

    Degenerate strokes carry no usable dynamics and are dropped.  For the
    direction criterion the tangent angle is replaced by the net
    displacement heading, which flips under reversal even when the stroke
    curls back on itself.
    """
    if criterion == "order":
        # order is about the sequence of pen-down units; comparing at the
        # velocity-segment level would punish a writing whose speed
        # profile merely splits differently from the model's
        base = model.pen_strokes or model.strokes
        strokes = [s for s in base if not s.degenerate]
    else:
        strokes = [s for s in model.strokes if not s.degenerate]
    if criterion == "kinematic":
        # dots and ticks span a handful of samples; their pulse fits are
        # quantization noise and widen every correct band, so the dynamic
        # view keeps only strokes from pen-down units of substantive extent
        kept = [s for s in strokes if s.pen_fraction >= 0.15]
        strokes = kept or strokes
    rows = []
    for stroke in strokes:
        f = stroke.features()
        if criterion == "direction":
            f[8] = stroke.displacement_angle
        rows.append(f)
    if not rows:
        return np.zeros((0, FEATURE_DIM))
    return np.stack(rows, axis=0)


def select_features(features: np.ndarray, selector: Selector) -> np.ndarray:
    if features.shape[-1] != len(selector.weights):
        raise ValueError("feature dimension mismatch")
    return features * selector.weights


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def normalized_distance(
    u: np.ndarray,
    v: np.ndarray,
    stats: FeatureStats,
    selector: Selector,
    index: int | None = None,
) -> float:
    """Euclidean distance in std units over the selector's active dims.

    Angle dimensions use the wrapped difference so headings on either
    side of the branch cut stay close.  ``index`` selects per-stroke
    normalization when the stats carry it.
    """
    diff = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    for dim, period in ANGLE_PERIODS.items():
        if dim < diff.size:
            diff[dim] = (diff[dim] + period / 2.0) % period - period / 2.0
    active = selector.weights != 0.0
    du = diff[active] / stats.sigma(index)[active]
    return float(np.sqrt(np.sum(du * du)))


def _directional(test_sel, model_sel, test_raw, model_raw, stats, selector, matched_is_reference):
    """Mean matched distance from each test stroke into one model.

    ``matched_is_reference`` says which side of the pair carries the
    stroke index used for per-index normalization: True when the second
    (matched) sequence is the reference model, False when the roles are
    swapped and the querying index is the reference one.
    """
    n_m = len(model_sel)
    r = selector.neighborhood
    dds = []
    for i in range(len(test_sel)):
        j_lo = min(max(i - r, 0), n_m - 1)
        j_hi = min(max(i + r, 0), n_m - 1)
        best_j = j_lo
        best_sim = -np.inf
        for j in range(j_lo, j_hi + 1):
            sim = cosine_similarity(test_sel[i], model_sel[j])
            if sim > best_sim:
                best_sim = sim
                best_j = j
        ref_index = best_j if matched_is_reference else i
        dds.append(normalized_distance(test_raw[i], model_raw[best_j], stats, selector, ref_index))
    dds = np.asarray(dds)
    penalty = abs(len(test_sel) - n_m) * float(np.median(dds))
    return float(np.mean(dds)) + penalty


def sd_dd(
    test: np.ndarray,
    models: list[np.ndarray],
    selector: Selector,
    stats: FeatureStats,
) -> float:
    """Dissimilarity distance of a test stroke sequence to a model set.

    Candidate matches for stroke i are model strokes within the selector's
    index neighborhood (clamped); the most cosine-similar candidate is
    scored by normalized distance.  Each model contributes the average of
    the test-to-model and model-to-test passes; stroke-count mismatch adds
    a median-scaled penalty per pass.
    """
    test = np.asarray(test, dtype=float)
    if not models:
        raise ValueError("empty model list")
    if len(test) == 0:
        raise ValueError("empty test sequence")
    test_sel = select_features(test, selector)
    per_model = []
    for model in models:
        model = np.asarray(model, dtype=float)
        if len(model) == 0:
            raise ValueError("empty model sequence")
        model_sel = select_features(model, selector)
        fwd = _directional(test_sel, model_sel, test, model, stats, selector, True)
        bwd = _directional(model_sel, test_sel, model, test, stats, selector, False)
        per_model.append(0.5 * (fwd + bwd))
    return float(np.mean(per_model))
