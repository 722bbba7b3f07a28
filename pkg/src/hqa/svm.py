"""RBF-kernel support vector machine trained by pairwise dual updates.

Small, dependency-free trainer sized for desk-scale corpora: the full
kernel matrix is precomputed and the working pair is always the maximal
KKT violator, so training is deterministic.  Confidences come from a
Platt sigmoid fit on the training decision values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_C = 10.0
KKT_TOL = 1e-3
MAX_PASSES = 100_000
STD_FLOOR = 1e-6
# calibrated probabilities are clamped away from 0 and 1: a lone engine
# must never saturate a fused score past what the score of a perfectly
# matched reference could reach
CONF_CAP = 0.97
# the floor is far looser than the cap: overclaiming correctness inflates
# a fused score past the reachable ceiling, while a near-zero confidence
# on a gross defect is exactly what downstream class selection needs
CONF_FLOOR = 0.01
# calibration targets are harder than the output cap: a steeper sigmoid
# pushes borderline decision values onto the clamp rails instead of
# leaving them hovering near the class boundary
CONF_TARGET = 0.99


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    gamma: float
    platt_a: float
    platt_b: float
    class_labels: tuple
    feature_mean: np.ndarray
    feature_scale: np.ndarray


def _rbf(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    sq = np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)
    return np.exp(-gamma * sq)


def _standardize_stats(x: np.ndarray):
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale < STD_FLOOR, 1.0, scale)
    return mean, scale


def _smo(kernel: np.ndarray, y: np.ndarray, c: float, tol: float, max_passes: int):
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    q_cols = kernel * np.outer(y, y)
    for _ in range(max_passes):
        neg_yg = -y * grad
        up = ((y > 0) & (alpha < c - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < c - 1e-12))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(neg_yg[up])])
        j = int(np.flatnonzero(low)[np.argmin(neg_yg[low])])
        m_up = neg_yg[i]
        m_low = neg_yg[j]
        if m_up - m_low <= tol:
            break
        eta = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        eta = max(eta, 1e-12)
        step = (m_up - m_low) / eta
        if y[i] > 0:
            lo_i, hi_i = -alpha[i], c - alpha[i]
        else:
            lo_i, hi_i = alpha[i] - c, alpha[i]
        if y[j] > 0:
            lo_j, hi_j = alpha[j] - c, alpha[j]
        else:
            lo_j, hi_j = -alpha[j], c - alpha[j]
        step = min(step, hi_i, hi_j)
        step = max(step, lo_i, lo_j)
        if abs(step) < 1e-15:
            break
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        grad += q_cols[:, i] * (y[i] * step) + q_cols[:, j] * (-y[j] * step)
    neg_yg = -y * grad
    free = (alpha > 1e-8) & (alpha < c - 1e-8)
    if free.any():
        bias = float(np.mean(neg_yg[free]))
    else:
        up = ((y > 0) & (alpha < c - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < c - 1e-12))
        hi = neg_yg[up].max() if up.any() else 0.0
        lo = neg_yg[low].min() if low.any() else 0.0
        bias = float(0.5 * (hi + lo))
    return alpha, bias


def _fit_platt(decisions: np.ndarray, y: np.ndarray, max_iter: int = 100):
    """Sigmoid calibration by maximum likelihood (Newton steps).

    Targets are nearly hard rather than count-smoothed: the labels come
    from a generator, not from noisy annotation, and the downstream
    fusion needs committed confidences on clear defects.
    """
    pos = y > 0
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    t = np.where(pos, CONF_TARGET, 1.0 - CONF_TARGET)
    a = 0.0
    b = np.log((n_neg + 1.0) / (n_pos + 1.0))

    def nll(a, b):
        z = a * decisions + b
        # stable log(1+e^z) with the target reformulation
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-z)), (t - 1) * z + np.log1p(np.exp(z)))))

    best = nll(a, b)
    for _ in range(max_iter):
        z = a * decisions + b
        p = np.where(z >= 0, np.exp(-z) / (1 + np.exp(-z)), 1 / (1 + np.exp(z)))
        d1 = t - p
        d2 = np.maximum(p * (1 - p), 1e-12)
        g_a = float(np.sum(d1 * decisions))
        g_b = float(np.sum(d1))
        if abs(g_a) < 1e-9 and abs(g_b) < 1e-9:
            break
        h_aa = float(np.sum(d2 * decisions * decisions)) + 1e-12
        h_ab = float(np.sum(d2 * decisions))
        h_bb = float(np.sum(d2)) + 1e-12
        det = h_aa * h_bb - h_ab * h_ab
        if det <= 0:
            break
        da = -(h_bb * g_a - h_ab * g_b) / det
        db = -(h_aa * g_b - h_ab * g_a) / det
        stepsize = 1.0
        improved = False
        while stepsize > 1e-10:
            na, nb = a + stepsize * da, b + stepsize * db
            val = nll(na, nb)
            if val <= best + 1e-12:
                a, b, best = na, nb, val
                improved = True
                break
            stepsize *= 0.5
        if not improved:
            break
    # fitted form is already confidence = 1/(1+exp(a*d + b))
    return a, b


def train(x: np.ndarray, y, c: float = DEFAULT_C, gamma: float | None = None) -> SvmModel:
    """Train a binary RBF classifier; labels may be any two distinct values.

    The larger label (after sorting) plays the positive class, whose
    probability `confidence` reports.
    """
    x = np.asarray(x, dtype=float)
    labels = sorted(set(np.asarray(y).tolist()))
    if len(labels) != 2:
        raise ValueError("need exactly two classes")
    y_signed = np.where(np.asarray(y) == labels[1], 1.0, -1.0)
    if gamma is None:
        gamma = 1.0 / x.shape[1]
    if c <= 0 or gamma <= 0:
        raise ValueError("C and gamma must be positive")
    mean, scale = _standardize_stats(x)
    xs = (x - mean) / scale
    kernel = _rbf(xs, xs, gamma)
    alpha, bias = _smo(kernel, y_signed, c, KKT_TOL, MAX_PASSES)
    dual = alpha * y_signed
    keep = np.abs(alpha) > 1e-10
    if not keep.any():
        keep = np.ones(len(alpha), dtype=bool)
    decisions = kernel[:, keep] @ dual[keep] + bias
    platt_a, platt_b = _fit_platt(decisions, y_signed)
    return SvmModel(
        support_vectors=xs[keep].copy(),
        dual_coef=dual[keep].copy(),
        bias=float(bias),
        gamma=float(gamma),
        platt_a=float(platt_a),
        platt_b=float(platt_b),
        class_labels=(labels[0], labels[1]),
        feature_mean=mean,
        feature_scale=scale,
    )


def decision(model: SvmModel, x: np.ndarray) -> np.ndarray | float:
    """Kernel-expansion decision value(s); positive favors class_labels[1]."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.support_vectors.shape[1]:
        raise ValueError("feature dimension mismatch")
    xs = (x - model.feature_mean) / model.feature_scale
    k = _rbf(xs, model.support_vectors, model.gamma)
    d = k @ model.dual_coef + model.bias
    return float(d[0]) if single else d


def confidence(model: SvmModel, x: np.ndarray) -> np.ndarray | float:
    """Calibrated probability of the positive class, clamped to the cap."""
    d = decision(model, x)
    z = model.platt_a * np.asarray(d) + model.platt_b
    p = np.where(z >= 0, np.exp(-z) / (1 + np.exp(-z)), 1 / (1 + np.exp(z)))
    p = np.clip(p, CONF_FLOOR, CONF_CAP)
    return float(p) if np.isscalar(d) else p


def predict(model: SvmModel, x: np.ndarray):
    d = decision(model, x)
    if np.isscalar(d):
        return model.class_labels[1] if d >= 0 else model.class_labels[0]
    return np.where(np.asarray(d) >= 0, model.class_labels[1], model.class_labels[0])


def train_multiclass(x: np.ndarray, y, c: float = DEFAULT_C, gamma: float | None = None) -> dict:
    """One-vs-rest ensemble keyed by class label."""
    labels = sorted(set(np.asarray(y).tolist()))
    if len(labels) < 2:
        raise ValueError("need at least two classes")
    machines = {}
    for label in labels:
        machines[label] = train(x, (np.asarray(y) == label).astype(int), c=c, gamma=gamma)
    return machines


def predict_multiclass(machines: dict, x: np.ndarray):
    labels = sorted(machines)
    scores = np.stack([np.atleast_1d(confidence(machines[lb], x)) for lb in labels], axis=1)
    picks = np.argmax(scores, axis=1)
    out = [labels[p] for p in picks]
    return out[0] if np.asarray(x).ndim == 1 else out
