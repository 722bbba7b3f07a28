"""Offline 32x32 view of the ink and zoned density features.

The raster stands in for a learned image model: whatever extractor is
plugged in, scoring only sees a fixed-length feature vector.  The default
extractor is an 8x8 grid of block densities.
"""

from __future__ import annotations

import numpy as np

from hqa.ink import InkSample

RASTER_SIZE = 32
RASTER_MARGIN = 2
SUPERSAMPLE = 4
INK_RADIUS = 0.5

EXTRACTORS = ("zone8",)


def _sample_segments(sample: InkSample) -> list[np.ndarray]:
    polys = [s.xy() for s in sample.strokes if len(s.points) > 0]
    if not polys:
        raise ValueError("empty sample")
    return polys


def _render(polys: list[np.ndarray], supersample: int) -> np.ndarray:
    """Rasterize grid-space polylines by supersampled distance testing.

    All segments are tested against all subpixel centers in one broadcast;
    float32 is plenty for a 0.5-unit ink radius on a 32-unit grid.
    """
    heads = []
    tails = []
    for pts in polys:
        if len(pts) == 1:
            pts = np.concatenate([pts, pts], axis=0)
        heads.append(pts[:-1])
        tails.append(pts[1:])
    a = np.concatenate(heads).astype(np.float32)
    b = np.concatenate(tails).astype(np.float32)
    ab = b - a
    denom = np.maximum((ab * ab).sum(axis=1), np.float32(1e-12))

    sub = ((np.arange(RASTER_SIZE * supersample) + 0.5) / supersample).astype(np.float32)
    gx, gy = np.meshgrid(sub, sub)
    cx = gx.ravel()
    cy = gy.ravel()

    # t = ((c - a) . ab) / |ab|^2, expanded to avoid a 3-d temporary
    t = (np.outer(cx, ab[:, 0]) + np.outer(cy, ab[:, 1]) - (a * ab).sum(axis=1)) / denom
    np.clip(t, 0.0, 1.0, out=t)
    dx = cx[:, None] - (a[:, 0] + t * ab[:, 0])
    dy = cy[:, None] - (a[:, 1] + t * ab[:, 1])
    d2 = dx * dx
    d2 += dy * dy
    dmin = d2.min(axis=1)

    # row index follows y, column index follows x
    lit = (dmin <= INK_RADIUS * INK_RADIUS).reshape(
        RASTER_SIZE, supersample, RASTER_SIZE, supersample
    )
    return lit.mean(axis=(1, 3)).astype(float)


def rasterize(sample: InkSample, supersample: int = SUPERSAMPLE) -> np.ndarray:
    """Draw the ink into a 32x32 intensity grid.

    The bounding box is fitted into the grid with a 2-pixel margin,
    aspect ratio preserved (letterboxed).  Pixel intensity is the
    fraction of supersampled subpixel centers lying within half a pixel
    of the trajectory.
    """
    polys = _sample_segments(sample)
    min_x, min_y, max_x, max_y = sample.bounds()
    span = max(max_x - min_x, max_y - min_y)
    inner = RASTER_SIZE - 2 * RASTER_MARGIN
    scale = inner / span if span > 0 else 1.0
    off_x = RASTER_MARGIN + 0.5 * (inner - scale * (max_x - min_x))
    off_y = RASTER_MARGIN + 0.5 * (inner - scale * (max_y - min_y))
    mapped = [
        np.stack(
            [off_x + scale * (p[:, 0] - min_x), off_y + scale * (p[:, 1] - min_y)],
            axis=1,
        )
        for p in polys
    ]
    return _render(mapped, supersample)


def rasterize_banded(sample: InkSample, supersample: int = SUPERSAMPLE) -> np.ndarray:
    """Draw the ink anchored to the guidelines instead of its own bounds.

    The median band maps to the middle third of the grid rows, so where
    the ink sits against the reference lines is part of the picture
    rather than being normalized away.  Ink far outside the band slides
    off the grid, which is itself informative: mass goes missing from
    every zone.  Horizontal placement carries no reference, so x is
    centered; the scale is shared to keep the aspect ratio.
    """
    polys = _sample_segments(sample)
    g = sample.guidelines
    band = g.baseline_y - g.median_top_y
    inner = RASTER_SIZE - 2 * RASTER_MARGIN
    scale = inner / (3.0 * band)
    min_x, _, max_x, _ = sample.bounds()
    cx = 0.5 * (min_x + max_x)
    cy = 0.5 * (g.baseline_y + g.median_top_y)
    half = RASTER_SIZE / 2.0
    mapped = [
        np.stack(
            [half + scale * (p[:, 0] - cx), half + scale * (p[:, 1] - cy)],
            axis=1,
        )
        for p in polys
    ]
    return _render(mapped, supersample)


def shape_features(raster: np.ndarray, extractor_id: str = "zone8") -> np.ndarray:
    """Fixed-length shape feature vector of a raster."""
    if extractor_id != "zone8":
        raise ValueError(f"unknown extractor: {extractor_id!r}")
    r = np.asarray(raster, dtype=float)
    if r.shape != (RASTER_SIZE, RASTER_SIZE):
        raise ValueError("raster must be 32x32")
    return r.reshape(8, 4, 8, 4).mean(axis=(1, 3)).reshape(64)


def sample_shape_features(sample: InkSample, extractor_id: str = "zone8") -> np.ndarray:
    return shape_features(rasterize(sample), extractor_id)


def raster_to_pgm(raster: np.ndarray) -> str:
    """ASCII PGM dump for eyeballing rasters in a terminal."""
    r = np.asarray(raster, dtype=float)
    lines = ["P2", f"{RASTER_SIZE} {RASTER_SIZE}", "255"]
    for row in r:
        lines.append(" ".join(str(int(round(255 * v))) for v in row))
    return "\n".join(lines) + "\n"
