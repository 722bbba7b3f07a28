"""Synthetic writing samples and labeled error corpora.

Samples are drawn from the parametric symbol catalog with a bell-shaped
speed profile per stroke leg, mild per-writer style variation and smooth
coordinate noise.  Perturbations inject exactly one kind of error each, so
every generated sample carries trustworthy per-criterion ground truth.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hqa.ink import InkPoint, InkSample, PenStroke, RefLines, SampleMeta, write_sample
from hqa.symbols import BASELINE_Y, MEDIAN_TOP_Y, StrokeSpec, SymbolSpec

SAMPLE_RATE = 100.0
STROKE_GAP = 0.08
DEFAULT_NOISE = 0.8

ERROR_KINDS = (
    "omit_stroke",
    "deform_shape",
    "exceed_stroke",
    "reverse_direction",
    "swap_order",
    "baseline_overflow",
    "kinematic_jitter",
)

# the criterion whose ground-truth bit each error kind flips
KIND_CRITERION = {
    "omit_stroke": "shape",
    "deform_shape": "shape",
    "exceed_stroke": "shape",
    "reverse_direction": "direction",
    "swap_order": "order",
    "baseline_overflow": "position",
    "kinematic_jitter": "kinematic",
}

KIND_CLASS = {
    "omit_stroke": 2,
    "deform_shape": 2,
    "exceed_stroke": 2,
    "swap_order": 3,
    "reverse_direction": 4,
    "baseline_overflow": 5,
    "kinematic_jitter": 6,
}

DEFAULT_MAGNITUDES = {
    "omit_stroke": 1.0,
    "deform_shape": 0.35,
    "exceed_stroke": 1.0,
    "reverse_direction": 1.0,
    "swap_order": 1.0,
    "baseline_overflow": 40.0,
    "kinematic_jitter": 0.9,
}


@dataclass(frozen=True)
class ErrorMode:
    kind: str
    magnitude: float

    def __post_init__(self):
        if self.kind not in ERROR_KINDS:
            raise ValueError(f"unknown error kind: {self.kind!r}")
        if self.magnitude < 0:
            raise ValueError("magnitude must be >= 0")


def _bell_positions(count: int) -> np.ndarray:
    """Arc positions of a stroke leg sampled with a bell speed profile."""
    s = np.linspace(0.0, 1.0, count)
    return s - np.sin(2.0 * np.pi * s) / (2.0 * np.pi)


def _stroke_positions(spec: StrokeSpec, duration: float, rng) -> np.ndarray:
    if spec.kind == "poly":
        pts = np.asarray(spec.params, dtype=float).reshape(-1, 2)
        seg = np.hypot(*np.diff(pts, axis=0).T)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        # one bell per leg so the pen slows into each corner
        n_total = max(4, int(round(duration * SAMPLE_RATE)))
        counts = np.maximum(2, np.round(n_total * seg / total).astype(int))
        us = []
        for leg, n_leg in enumerate(counts):
            u_leg = _bell_positions(n_leg + 1)
            base = cum[leg] / total
            span = seg[leg] / total
            chunk = base + span * u_leg
            us.append(chunk if leg == 0 else chunk[1:])
        u = np.concatenate(us)
    else:
        n_total = max(4, int(round(duration * SAMPLE_RATE)))
        u = _bell_positions(n_total + 1)
    return spec.point(u)


def _smooth_noise(n: int, dt: float, amplitude: float, rng) -> np.ndarray:
    t = np.arange(n) * dt
    out = np.zeros((n, 2))
    if amplitude <= 0:
        return out
    for axis in range(2):
        for _ in range(2):
            a = amplitude * rng.uniform(0.3, 1.0)
            f = rng.uniform(0.7, 2.5)
            phi = rng.uniform(0.0, 2.0 * np.pi)
            out[:, axis] += a * np.sin(2.0 * np.pi * f * t + phi)
    return out


def synth_sample(
    spec: SymbolSpec, style_seed: int, noise_level: float = DEFAULT_NOISE
) -> InkSample:
    """Deterministic synthetic drawing of a symbol.

    Style variation (small scale/rotation/offset and per-stroke tempo) is
    derived from the seed; coordinate noise is smooth in time so the
    trajectory stays plausibly human.
    """
    rng = np.random.default_rng(style_seed)
    scale = rng.uniform(0.96, 1.04)
    angle = np.radians(rng.uniform(-2.0, 2.0))
    off = rng.uniform(-2.0, 2.0, size=2)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])

    all_pts = np.concatenate([s.point(np.linspace(0, 1, 16)) for s in spec.strokes])
    center = all_pts.mean(axis=0)

    strokes = []
    t_cursor = 0.0
    for stroke_spec in spec.strokes:
        length = stroke_spec.control_length()
        duration = float(np.clip(0.25 + length / 220.0, 0.2, 0.9))
        duration *= rng.uniform(0.92, 1.08)
        pts = _stroke_positions(stroke_spec, duration, rng)
        pts = (pts - center) * scale @ rot.T + center + off
        dt = duration / (len(pts) - 1)
        pts = pts + _smooth_noise(len(pts), dt, noise_level, rng)
        times = t_cursor + np.arange(len(pts)) * dt
        strokes.append(PenStroke.from_arrays(pts, times))
        t_cursor = times[-1] + STROKE_GAP
    return InkSample(
        strokes=tuple(strokes),
        guidelines=RefLines(baseline_y=BASELINE_Y, median_top_y=MEDIAN_TOP_Y),
        meta=SampleMeta(script=spec.script, target=spec.target),
    )


def _retime(strokes: list[PenStroke]) -> list[PenStroke]:
    """Lay strokes out contiguously, keeping each stroke's internal rhythm."""
    out = []
    t_cursor = 0.0
    for stroke in strokes:
        times = stroke.times()
        times = times - times[0] + t_cursor
        out.append(PenStroke.from_arrays(stroke.xy(), times))
        t_cursor = times[-1] + STROKE_GAP
    return out


def perturb(sample: InkSample, mode: ErrorMode, seed: int = 0) -> InkSample:
    """Apply one labeled error to a sample; magnitude zero is the identity."""
    if mode.magnitude == 0.0:
        return sample
    rng = np.random.default_rng(seed)
    strokes = list(sample.strokes)

    if mode.kind == "omit_stroke":
        if len(strokes) < 2:
            raise ValueError("omit_stroke needs at least 2 strokes")
        drop = int(rng.integers(1, len(strokes)))
        del strokes[drop]
        return sample.with_strokes(tuple(strokes))

    if mode.kind == "deform_shape":
        # anisotropic squash plus shear about the glyph centre; an affine
        # map adds no curvature anywhere, so the trace stays split-free
        # and the defect reads as shape only, not as broken movement
        min_x, min_y, max_x, max_y = sample.bounds()
        cx = 0.5 * (min_x + max_x)
        cy = 0.5 * (min_y + max_y)
        m = mode.magnitude
        # one axis stretches while the other squashes: pure aspect
        # distortion survives the ink-length renormalization below,
        # whereas same-sign scaling would be undone by it
        flip = rng.choice([-1.0, 1.0])
        sx = 1.0 + flip * rng.uniform(0.6, 1.0) * m
        sy = 1.0 - flip * rng.uniform(0.6, 1.0) * m
        shear = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0) * m
        mat = np.array([[sx, shear], [0.0, sy]])
        centre = np.array([cx, cy])
        warped = [(stroke.xy() - centre) @ mat.T + centre for stroke in strokes]
        # restore the original total ink length: the writer draws the same
        # amount of trace in the same time, so peak speeds stay in the
        # template range and the defect does not bleed into kinematics
        len_of = lambda polys: sum(
            float(np.hypot(*np.diff(p, axis=0).T).sum()) for p in polys
        )
        before = len_of([s.xy() for s in strokes])
        after = len_of(warped)
        if after > 1e-9:
            k = before / after
            warped = [(p - centre) * k + centre for p in warped]
        ys_min = min(float(p[:, 1].min()) for p in warped)
        ys_max = max(float(p[:, 1].max()) for p in warped)
        limit = sample.guidelines.baseline_y - 1.0
        if ys_max > limit and ys_max > ys_min:
            # squeeze back above the baseline linearly; clipping would
            # leave kinks that read as velocity defects
            s = (limit - ys_min) / (ys_max - ys_min)
            warped = [
                np.stack([p[:, 0], ys_min + (p[:, 1] - ys_min) * s], axis=1)
                for p in warped
            ]
        out = []
        for p, stroke in zip(warped, strokes):
            # re-space the points along the warped path at the original
            # arc-length fractions: the drawing is misshapen but executed
            # with the writer's usual speed profile
            xy = stroke.xy()
            seg0 = np.hypot(*np.diff(xy, axis=0).T)
            cum0 = np.concatenate([[0.0], np.cumsum(seg0)])
            if cum0[-1] > 0:
                fr = cum0 / cum0[-1]
            else:
                fr = np.linspace(0.0, 1.0, len(xy))
            seg1 = np.hypot(*np.diff(p, axis=0).T)
            cum1 = np.concatenate([[0.0], np.cumsum(seg1)])
            grid = fr * cum1[-1]
            resp = np.stack(
                [np.interp(grid, cum1, p[:, 0]), np.interp(grid, cum1, p[:, 1])], axis=1
            )
            out.append(PenStroke.from_arrays(resp, stroke.times()))
        return sample.with_strokes(tuple(out))

    if mode.kind == "exceed_stroke":
        _, _, max_x, _ = sample.bounds()
        length = 10.0 + 10.0 * mode.magnitude
        y_tick = 0.5 * (sample.guidelines.median_top_y + sample.guidelines.baseline_y)
        n = 21
        xs = max_x + 4.0 + length * _bell_positions(n)
        ys = np.full(n, y_tick)
        t0 = strokes[-1].times()[-1] + STROKE_GAP
        times = t0 + np.arange(n) * 0.01
        strokes.append(PenStroke.from_arrays(np.stack([xs, ys], axis=1), times))
        return sample.with_strokes(tuple(strokes))

    if mode.kind == "reverse_direction":
        out = []
        for stroke in strokes:
            out.append(PenStroke.from_arrays(stroke.xy()[::-1], stroke.times()))
        return sample.with_strokes(tuple(out))

    if mode.kind == "swap_order":
        if len(strokes) < 2:
            raise ValueError("swap_order needs at least 2 strokes")
        k = int(rng.integers(0, len(strokes) - 1))
        strokes[k], strokes[k + 1] = strokes[k + 1], strokes[k]
        return sample.with_strokes(tuple(_retime(strokes)))

    if mode.kind == "baseline_overflow":
        out = []
        for stroke in strokes:
            xy = stroke.xy().copy()
            xy[:, 1] += mode.magnitude
            out.append(PenStroke.from_arrays(xy, stroke.times()))
        return sample.with_strokes(tuple(out))

    if mode.kind == "kinematic_jitter":
        m = min(mode.magnitude, 0.9)
        out = []
        for stroke in strokes:
            times = stroke.times()
            dts = np.diff(times)
            n = len(dts)
            # hesitation tremor: the pen nearly halts at fixed arc
            # positions, carving extra velocity minima so the writing
            # decomposes into more pulses than the model; a smooth speed
            # wobble would be consolidated away as a shallow dip.  Fixed
            # halt positions keep the jittered writings clustered so the
            # counter-score can anchor on them
            idx = np.arange(n)
            slow = np.zeros(n)
            for c in (np.arange(3) + 0.5) / 3.0:
                slow += np.exp(-0.5 * ((idx - c * n) / 1.5) ** 2)
            warp = 1.0 + 4.0 * m * slow
            new = np.concatenate([[times[0]], times[0] + np.cumsum(dts * warp)])
            out.append(PenStroke.from_arrays(stroke.xy(), new))
        return sample.with_strokes(tuple(_retime(out)))

    raise ValueError(f"unknown error kind: {mode.kind!r}")


def applicable_kinds(spec: SymbolSpec) -> tuple[str, ...]:
    """Error classes generated for a symbol (balanced, one per class)."""
    if len(spec.strokes) >= 2:
        return (
            "omit_stroke",
            "deform_shape",
            "swap_order",
            "reverse_direction",
            "baseline_overflow",
            "kinematic_jitter",
        )
    return (
        "deform_shape",
        "exceed_stroke",
        "reverse_direction",
        "baseline_overflow",
        "kinematic_jitter",
    )


def derive_seed(*parts) -> int:
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


def _magnitude_for(kind: str, rng) -> float:
    base = DEFAULT_MAGNITUDES[kind]
    if kind == "deform_shape":
        return base * rng.uniform(0.9, 1.3)
    if kind == "baseline_overflow":
        return base * rng.uniform(0.95, 1.15)
    if kind == "exceed_stroke":
        return base * rng.uniform(0.8, 1.5)
    # tremor amplitude is not varied: jittered writings need to resemble
    # each other for the counter-score to anchor on them
    return base


def build_corpus(
    specs,
    out_dir: str | Path,
    n_train: int = 9,
    n_test: int = 5,
    seed: int = 0,
    noise_level: float = DEFAULT_NOISE,
) -> dict:
    """Write a labeled corpus to disk and return its manifest.

    Per symbol and class, the first `n_train` samples go to the train
    split and the next `n_test` to test.  Sample seeds derive from the
    corpus seed so regeneration is reproducible file by file.
    """
    out_dir = Path(out_dir)
    (out_dir / "samples").mkdir(parents=True, exist_ok=True)
    entries = []
    for spec in specs:
        classes = ("correct",) + applicable_kinds(spec)
        for cls in classes:
            for split, count, pad in (("train", n_train, 0), ("test", n_test, n_train)):
                for i in range(count):
                    idx = pad + i
                    style_seed = derive_seed(seed, spec.target, cls, idx, "style")
                    sample = synth_sample(spec, style_seed, noise_level)
                    criteria = {c: True for c in ("shape", "direction", "order", "kinematic", "position")}
                    class_index = 1
                    if cls != "correct":
                        mode_rng = np.random.default_rng(
                            derive_seed(seed, spec.target, cls, idx, "magnitude")
                        )
                        mode = ErrorMode(cls, _magnitude_for(cls, mode_rng))
                        sample = perturb(
                            sample, mode, seed=derive_seed(seed, spec.target, cls, idx, "perturb")
                        )
                        criteria[KIND_CRITERION[cls]] = False
                        class_index = KIND_CLASS[cls]
                    rel = f"samples/{spec.target}_{cls}_{split}_{idx:02d}.json"
                    (out_dir / rel).write_bytes(write_sample(sample))
                    entries.append(
                        {
                            "path": rel,
                            "target": spec.target,
                            "class_index": class_index,
                            "criteria": criteria,
                            "split": split,
                        }
                    )
    manifest = {"seed": seed, "entries": entries}
    text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    (out_dir / "manifest.json").write_text(text, encoding="utf-8")
    return manifest


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "entries" not in doc or "seed" not in doc:
        raise ValueError("not a corpus manifest")
    return doc
