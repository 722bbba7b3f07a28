"""Trajectory rasterization and the pooled shape features."""

import numpy as np
import pytest

from helpers import build_sample, line_sample

from hqa.raster import (
    RASTER_MARGIN,
    RASTER_SIZE,
    raster_to_pgm,
    rasterize,
    rasterize_banded,
    sample_shape_features,
    shape_features,
)


def _reference_render(sample, grid_pts, supersample=16):
    """Brute-force point-to-segment distance raster at high supersampling."""
    segs = []
    for pts in grid_pts:
        for a, b in zip(pts[:-1], pts[1:]):
            segs.append((np.asarray(a, float), np.asarray(b, float)))
    out = np.zeros((RASTER_SIZE, RASTER_SIZE))
    sub = (np.arange(supersample) + 0.5) / supersample
    for r in range(RASTER_SIZE):
        for c in range(RASTER_SIZE):
            hits = 0
            for dy in sub:
                for dx in sub:
                    px, py = c + dx, r + dy
                    best = np.inf
                    for a, b in segs:
                        ab = b - a
                        denom = float(ab @ ab)
                        if denom < 1e-12:
                            t = 0.0
                        else:
                            t = float(np.clip(((px - a[0]) * ab[0] + (py - a[1]) * ab[1]) / denom, 0.0, 1.0))
                        d = np.hypot(px - (a[0] + t * ab[0]), py - (a[1] + t * ab[1]))
                        best = min(best, d)
                    if best <= 0.5:
                        hits += 1
            out[r, c] = hits / supersample**2
    return out


def test_horizontal_line_lights_one_row_band():
    sample = line_sample(n=30, x0=0.0, y0=50.0, x1=100.0, y1=50.0)
    raster = rasterize(sample)
    assert raster.shape == (RASTER_SIZE, RASTER_SIZE)
    row_mass = raster.sum(axis=1)
    lit_rows = np.nonzero(row_mass > 0)[0]
    # a straight horizontal stroke occupies one or two adjacent rows
    assert 1 <= lit_rows.size <= 2
    assert np.all(np.diff(lit_rows) == 1) if lit_rows.size > 1 else True
    # letterboxed into the middle of the grid
    assert abs(float(np.mean(lit_rows)) - (RASTER_SIZE / 2 - 0.5)) <= 1.0
    lit_cols = np.nonzero(raster.sum(axis=0) > 0)[0]
    assert lit_cols[0] >= RASTER_MARGIN - 1
    assert lit_cols[-1] <= RASTER_SIZE - RASTER_MARGIN


def test_render_matches_brute_force_reference():
    # an awkward diagonal plus a vertical tail, checked cell by cell
    sample = build_sample(
        [
            [(0.0, 0.0, 0.0), (96.0, 60.0, 1.0)],
            [(50.0, 10.0, 0.0), (50.0, 90.0, 1.0)],
        ]
    )
    got = rasterize(sample)

    min_x, min_y, max_x, max_y = sample.bounds()
    span = max(max_x - min_x, max_y - min_y)
    inner = RASTER_SIZE - 2 * RASTER_MARGIN
    scale = inner / span
    off_x = RASTER_MARGIN + 0.5 * (inner - scale * (max_x - min_x))
    off_y = RASTER_MARGIN + 0.5 * (inner - scale * (max_y - min_y))
    grid_pts = [
        np.stack(
            [off_x + scale * (s.xy()[:, 0] - min_x), off_y + scale * (s.xy()[:, 1] - min_y)],
            axis=1,
        )
        for s in sample.strokes
    ]
    want = _reference_render(sample, grid_pts, supersample=16)
    assert np.max(np.abs(got - want)) <= 0.1


def test_rasterize_translation_invariance():
    base = [(10.0 + i * 2.0, 30.0 + (i % 7) * 3.0, i / 100.0) for i in range(40)]
    shifted = [(x + 500.0, y - 200.0, t) for x, y, t in base]
    r1 = rasterize(build_sample([base]))
    r2 = rasterize(build_sample([shifted]))
    assert np.allclose(r1, r2)


def test_rasterize_scale_invariance():
    base = [(10.0 + i * 2.0, 30.0 + (i % 7) * 3.0, i / 100.0) for i in range(40)]
    doubled = [(2.0 * x, 2.0 * y, t) for x, y, t in base]
    r1 = rasterize(build_sample([base]))
    r2 = rasterize(build_sample([doubled]))
    assert np.allclose(r1, r2, atol=1e-9)


def test_banded_raster_anchors_to_guidelines():
    # same ink, guidelines shifted: the banded raster must differ while the
    # bbox raster cannot see the change
    pts = [(20.0 + i, 60.0 + 0.3 * i, i / 100.0) for i in range(60)]
    s1 = build_sample([pts], baseline=100.0, median_top=40.0)
    s2 = build_sample([pts], baseline=160.0, median_top=100.0)
    assert np.allclose(rasterize(s1), rasterize(s2))
    b1 = rasterize_banded(s1)
    b2 = rasterize_banded(s2)
    assert not np.allclose(b1, b2)


def test_banded_raster_median_band_rows():
    # ink exactly on the median band edges lands on the middle third rows
    top = [(30.0 + i, 40.0, i / 100.0) for i in range(40)]
    bottom = [(30.0 + i, 100.0, i / 100.0 + 1.0) for i in range(40)]
    raster = rasterize_banded(build_sample([top, bottom]))
    lit_rows = np.nonzero(raster.sum(axis=1) > 0)[0]
    inner = RASTER_SIZE - 2 * RASTER_MARGIN
    band_px = inner / 3.0
    center = RASTER_SIZE / 2.0
    want_top = center - band_px / 2.0
    want_bottom = center + band_px / 2.0
    assert abs(lit_rows.min() + 0.5 - want_top) <= 1.0
    assert abs(lit_rows.max() + 0.5 - want_bottom) <= 1.0


def test_banded_raster_drops_far_outside_ink():
    inside = [(30.0 + i, 70.0, i / 100.0) for i in range(40)]
    way_below = [(30.0 + i, 400.0, i / 100.0 + 1.0) for i in range(40)]
    raster = rasterize_banded(build_sample([inside, way_below]))
    # only the in-band stroke contributes mass
    single = rasterize_banded(build_sample([inside]))
    assert np.allclose(raster, single)


def test_shape_features_pools_four_by_four_blocks():
    rng = np.random.default_rng(9)
    raster = rng.uniform(0.0, 1.0, size=(32, 32))
    feats = shape_features(raster)
    assert feats.shape == (64,)
    want = np.array(
        [
            raster[4 * i : 4 * i + 4, 4 * j : 4 * j + 4].mean()
            for i in range(8)
            for j in range(8)
        ]
    )
    assert np.allclose(feats, want)


def test_shape_features_trivial_grids():
    assert np.all(shape_features(np.zeros((32, 32))) == 0.0)
    assert np.allclose(shape_features(np.ones((32, 32))), 1.0)
    checker = np.indices((32, 32)).sum(axis=0) % 2
    assert np.allclose(shape_features(checker.astype(float)), 0.5)


def test_shape_features_rejects_bad_input():
    with pytest.raises(ValueError, match="32x32"):
        shape_features(np.zeros((16, 16)))
    with pytest.raises(ValueError, match="extractor"):
        shape_features(np.zeros((32, 32)), extractor_id="hog")


def test_sample_shape_features_end_to_end():
    feats = sample_shape_features(line_sample())
    assert feats.shape == (64,)
    assert feats.sum() > 0.0


def test_pgm_dump_header_and_values():
    raster = np.zeros((32, 32))
    raster[3, 5] = 1.0
    raster[10, 2] = 0.5
    text = raster_to_pgm(raster)
    lines = text.splitlines()
    assert lines[0] == "P2"
    assert lines[1] == "32 32"
    assert lines[2] == "255"
    assert len(lines) == 3 + 32
    grid = [[int(v) for v in row.split()] for row in lines[3:]]
    assert grid[3][5] == 255
    assert grid[10][2] == 128
    assert text.endswith("\n")
