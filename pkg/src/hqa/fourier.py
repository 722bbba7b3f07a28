"""Angular-signature Fourier descriptors.

A trajectory is resampled to equal arc-length steps; the tangent
inclination of each step, unwrapped, forms the signature theta(ell) with
the abscissa normalized so the total length is 2*pi.  Truncating the
Fourier series of that signature at eight harmonics gives a compact,
scale-invariant shape vector (rotation only shifts the mean term).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hqa.ink import InkSample

RESAMPLE_COUNT = 128
HARMONICS = 8
COEFF_DIM = 2 * HARMONICS + 1


@dataclass(frozen=True)
class Signature:
    """Unwrapped tangent-inclination signature on a 2*pi arc-length axis."""

    ell: np.ndarray
    theta: np.ndarray
    dL: np.ndarray

    def __post_init__(self):
        if abs(self.ell[-1] - 2.0 * np.pi) > 1e-9:
            raise ValueError("signature abscissa must end at 2*pi")


def _dedupe(points: np.ndarray) -> np.ndarray:
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(np.diff(points, axis=0) != 0.0, axis=1)
    return points[keep]


def resample_polyline(points: np.ndarray, count: int) -> np.ndarray:
    """Resample a polyline to `count` points equally spaced in arc length."""
    pts = _dedupe(np.asarray(points, dtype=float))
    if len(pts) < 2:
        raise ValueError("zero-length trajectory")
    seg = np.hypot(*np.diff(pts, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0.0:
        raise ValueError("zero-length trajectory")
    grid = np.linspace(0.0, total, count)
    return np.stack([np.interp(grid, cum, pts[:, 0]), np.interp(grid, cum, pts[:, 1])], axis=1)


def _hold_over_intervals(theta, mid, intervals):
    """Replace theta where `mid` falls in any interval with the carried value."""
    if not intervals:
        return theta
    theta = theta.copy()
    masked = np.zeros(len(theta), dtype=bool)
    for a, b in intervals:
        masked |= (mid >= a) & (mid <= b)
    carry = None
    for i in range(len(theta)):
        if masked[i]:
            if carry is not None:
                theta[i] = carry
        else:
            carry = theta[i]
    for i in range(len(theta) - 1, -1, -1):
        if masked[i] and carry is not None:
            theta[i] = carry
        elif not masked[i]:
            carry = theta[i]
    return theta


def _signature_of_polyline(points, count, hold_intervals=None, total_hint=None):
    pts = _dedupe(np.asarray(points, dtype=float))
    if len(pts) < 2:
        raise ValueError("zero-length trajectory")
    seg = np.hypot(*np.diff(pts, axis=0).T)
    total = float(np.sum(seg))
    if total <= 0.0:
        raise ValueError("zero-length trajectory")
    res = resample_polyline(pts, count)
    d = np.diff(res, axis=0)
    theta = np.arctan2(d[:, 1], d[:, 0])
    step = total / (count - 1)
    mid = (np.arange(count - 1) + 0.5) * step
    if hold_intervals:
        theta = _hold_over_intervals(theta, mid, hold_intervals)
    theta = np.unwrap(theta)
    n_seg = count - 1
    dL = np.full(n_seg, 2.0 * np.pi / n_seg)
    ell = np.arange(1, n_seg + 1) * (2.0 * np.pi / n_seg)
    return Signature(ell=ell, theta=theta, dL=dL)


def signature(points: np.ndarray, resample_count: int = RESAMPLE_COUNT) -> Signature:
    """Angular signature of one polyline.

    The polyline is resampled to `resample_count` points equally spaced
    in arc length; theta values are the unwrapped inclinations of the
    resampled segments and the abscissa is rescaled to end at 2*pi.
    """
    if resample_count < 16:
        raise ValueError("resample_count must be at least 16")
    return _signature_of_polyline(points, resample_count)


def sample_signature(sample: InkSample, resample_count: int = RESAMPLE_COUNT) -> Signature:
    """Signature over the whole sample in drawn order.

    Pen-up transitions contribute their jump distance to the arc length
    but hold the previous inclination, so stroke order and direction stay
    visible in the signature without fake jump headings.
    """
    if resample_count < 16:
        raise ValueError("resample_count must be at least 16")
    polys = [_dedupe(s.xy()) for s in sample.strokes]
    chunks = [polys[0]]
    jumps = []
    run = float(np.sum(np.hypot(*np.diff(polys[0], axis=0).T)))
    for poly in polys[1:]:
        gap_start = run
        prev_end = chunks[-1][-1]
        run += float(np.hypot(*(poly[0] - prev_end)))
        if run > gap_start:
            jumps.append((gap_start, run))
        chunks.append(poly)
        run += float(np.sum(np.hypot(*np.diff(poly, axis=0).T)))
    merged = np.concatenate(chunks, axis=0)
    return _signature_of_polyline(merged, resample_count, hold_intervals=jumps)


def fdm_coeffs(sig: Signature) -> np.ndarray:
    """Fourier coefficients [a0, a1, b1, ..., a8, b8] of a signature."""
    theta, ell, dL = sig.theta, sig.ell, sig.dL
    coeffs = np.empty(COEFF_DIM)
    coeffs[0] = np.sum(theta * dL) / (2.0 * np.pi)
    for j in range(1, HARMONICS + 1):
        coeffs[2 * j - 1] = np.sum(theta * np.cos(j * ell) * dL) / np.pi
        coeffs[2 * j] = np.sum(theta * np.sin(j * ell) * dL) / np.pi
    return coeffs


def reconstruct(coeffs: np.ndarray, ell: np.ndarray) -> np.ndarray:
    """Evaluate the truncated Fourier series at the given abscissas."""
    ell = np.asarray(ell, dtype=float)
    out = np.full_like(ell, float(coeffs[0]))
    for j in range(1, HARMONICS + 1):
        out += coeffs[2 * j - 1] * np.cos(j * ell) + coeffs[2 * j] * np.sin(j * ell)
    return out


def sample_descriptor(sample: InkSample, resample_count: int = RESAMPLE_COUNT) -> np.ndarray:
    """Whole-sample descriptor vector (17 dims)."""
    return fdm_coeffs(sample_signature(sample, resample_count))


def stroke_descriptors(sample: InkSample, resample_count: int = RESAMPLE_COUNT) -> np.ndarray:
    """Per-pen-stroke descriptor matrix, one 17-dim row per stroke."""
    rows = []
    for stroke in sample.strokes:
        try:
            rows.append(fdm_coeffs(signature(stroke.xy(), resample_count)))
        except ValueError:
            rows.append(np.zeros(COEFF_DIM))
    return np.stack(rows, axis=0)
