"""End-to-end analysis pipeline: templates, fitting, verdicts.

A template set holds, per target symbol, the reference models, the wrong
exemplars used for the counter-score, feature statistics, calibrated
thresholds, trained classifiers and fusion weights.  `fit_templates`
builds these from a labeled corpus; `analyze` turns one drawing plus its
template set into a verdict report.
"""

from __future__ import annotations

import json
import warnings as warnings_module
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hqa.beta_elliptic import BetaEllipticModel, decompose
from hqa.compare import FeatureStats, comparison_features, default_selectors, sd_dd
from hqa.fourier import COEFF_DIM, sample_descriptor, stroke_descriptors
from hqa.ink import InkSample, read_sample, sample_from_document, sample_to_document
from hqa.preprocess import RESAMPLE_RATE, preprocess
from hqa.raster import rasterize, rasterize_banded, shape_features
from hqa.scoring import (
    CLASS_LABELS,
    CRITERIA,
    ENGINE_ASSIGNMENTS,
    SHAPE_FLOOR,
    U_MAX,
    U_MIN,
    Thresholds,
    classify_global,
    combined_score,
    compute_thresholds,
    fuse,
    ns1,
    qualitative,
    quantile,
)
from hqa.svm import CONF_CAP, SvmModel, confidence, train

WEIGHT_FLOOR = 0.01
TEMPLATE_VERSION = 1
# the whole-sample descriptor alone cannot tell which stroke moved where;
# appending the leading per-stroke descriptors plus their layout (centroid
# and endpoints) keeps order and direction visible to the classifiers
FDM_STROKE_SLOTS = 3
LAYOUT_DIMS = 6
# quantiles from a handful of repetitions underestimate the spread of
# unseen correct writings; the fuzzy band keeps at least this t_cw/t_cc ratio
BAND_EXPANSION = 2.0


@dataclass(frozen=True)
class PipelineConfig:
    resample_rate: float = RESAMPLE_RATE
    u_max: float = U_MAX
    u_min: float = U_MIN
    n_models: int = 3
    n_wrong_exemplars: int = 8
    extractor_id: str = "zone8"
    shape_floor: float = SHAPE_FLOOR
    svm_c: float = 50.0
    service_port: int = 8000

    def __post_init__(self):
        if self.resample_rate <= 0:
            raise ValueError("resample_rate must be positive")
        for name in ("u_max", "u_min"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


@dataclass
class SampleFeatures:
    """Everything the engines need to know about one preprocessed sample."""

    bem: dict[str, np.ndarray]
    fdm: np.ndarray
    zone: np.ndarray
    zone_pos: np.ndarray
    warnings: list[str]


def extract_features(sample: InkSample, config: PipelineConfig) -> SampleFeatures:
    notes: list[str] = []
    with warnings_module.catch_warnings(record=True) as caught:
        warnings_module.simplefilter("always")
        pre = preprocess(sample, rate=config.resample_rate)
        model = decompose(pre, rate=config.resample_rate)
    for w in caught:
        notes.append(str(w.message))
    if not model.converged:
        notes.append("beta pulse fit did not converge; using initialization values")
    if any(s.degenerate for s in model.strokes):
        notes.append("degenerate (zero-velocity) stroke spans were skipped")
    bem = {crit: comparison_features(model, crit) for crit in CRITERIA}
    if all(len(m) == 0 for m in bem.values()):
        raise ValueError("sample has no usable strokes")
    per_stroke = np.zeros((FDM_STROKE_SLOTS, COEFF_DIM + LAYOUT_DIMS))
    rows = stroke_descriptors(pre)[:FDM_STROKE_SLOTS]
    lengths = [
        float(np.hypot(*np.diff(s.xy(), axis=0).T).sum())
        for s in pre.strokes[:FDM_STROKE_SLOTS]
    ]
    longest = max(lengths) if lengths else 0.0
    for k, stroke in enumerate(pre.strokes[:FDM_STROKE_SLOTS]):
        xy = stroke.xy()
        layout = np.concatenate([xy.mean(axis=0), xy[0], xy[-1]])
        # a stroke far below the glyph scale (a dot or tick) carries no
        # recoverable angular shape, only capture noise; keep its layout
        # and blank the harmonic part so it cannot wash out the margin
        if lengths[k] < 0.15 * longest:
            rows[k] = np.zeros(COEFF_DIM)
        per_stroke[k] = np.concatenate([rows[k], layout])
    fdm = np.concatenate([sample_descriptor(pre), per_stroke.ravel()])
    zone = shape_features(rasterize(pre), config.extractor_id)
    zone_pos = shape_features(rasterize_banded(pre), config.extractor_id)
    return SampleFeatures(bem=bem, fdm=fdm, zone=zone, zone_pos=zone_pos, warnings=notes)


@dataclass
class TemplateSet:
    """Fitted per-target reference data, ready for analysis."""

    target: str
    script: str
    guidelines: dict[str, float]
    model_docs: list[dict]
    wrong_docs: list[dict]
    wrong_tags: list[list[str]]
    stats: dict[str, FeatureStats]
    thresholds: dict[str, dict[str, Thresholds]]
    weights: dict[str, dict[str, float]]
    svms: dict[str, dict[str, SvmModel]]
    config: PipelineConfig = field(default_factory=PipelineConfig)
    _model_features: list[SampleFeatures] | None = None
    _wrong_features: list[SampleFeatures] | None = None

    def model_features(self) -> list[SampleFeatures]:
        if self._model_features is None:
            self._model_features = [
                extract_features(sample_from_document(doc), self.config) for doc in self.model_docs
            ]
        return self._model_features

    def wrong_features(self) -> list[SampleFeatures]:
        if self._wrong_features is None:
            self._wrong_features = [
                extract_features(sample_from_document(doc), self.config) for doc in self.wrong_docs
            ]
        return self._wrong_features


@dataclass(frozen=True)
class Verdict:
    class_index: int
    class_label: str
    scores: dict[str, float]
    qualitative: dict[str, dict]
    warnings: tuple[str, ...]

    def as_report(self) -> dict:
        return {
            "class_index": self.class_index,
            "class_label": self.class_label,
            "scores": {k: self.scores[k] for k in CRITERIA},
            "qualitative": {k: self.qualitative[k] for k in CRITERIA},
            "warnings": list(self.warnings),
        }


def report_bytes(verdict: Verdict) -> bytes:
    return (json.dumps(verdict.as_report(), sort_keys=True, indent=2) + "\n").encode("utf-8")


def _svm_to_blob(model: SvmModel) -> dict:
    return {
        "support_vectors": model.support_vectors.tolist(),
        "dual_coef": model.dual_coef.tolist(),
        "bias": model.bias,
        "gamma": model.gamma,
        "platt_a": model.platt_a,
        "platt_b": model.platt_b,
        "class_labels": list(model.class_labels),
        "feature_mean": model.feature_mean.tolist(),
        "feature_scale": model.feature_scale.tolist(),
    }


def _svm_from_blob(blob: dict) -> SvmModel:
    return SvmModel(
        support_vectors=np.asarray(blob["support_vectors"], dtype=float),
        dual_coef=np.asarray(blob["dual_coef"], dtype=float),
        bias=float(blob["bias"]),
        gamma=float(blob["gamma"]),
        platt_a=float(blob["platt_a"]),
        platt_b=float(blob["platt_b"]),
        class_labels=tuple(blob["class_labels"]),
        feature_mean=np.asarray(blob["feature_mean"], dtype=float),
        feature_scale=np.asarray(blob["feature_scale"], dtype=float),
    )


def _stats_to_blob(st: FeatureStats) -> dict:
    blob = {"mean": st.mean.tolist(), "std": st.std.tolist()}
    if st.index_std is not None and st.index_mean is not None:
        blob["index_mean"] = st.index_mean.tolist()
        blob["index_std"] = st.index_std.tolist()
    return blob


def _stats_from_blob(blob: dict) -> FeatureStats:
    return FeatureStats(
        mean=np.asarray(blob["mean"], dtype=float),
        std=np.asarray(blob["std"], dtype=float),
        index_mean=np.asarray(blob["index_mean"], dtype=float) if "index_mean" in blob else None,
        index_std=np.asarray(blob["index_std"], dtype=float) if "index_std" in blob else None,
    )


def template_to_document(ts: TemplateSet) -> dict:
    return {
        "version": TEMPLATE_VERSION,
        "target": ts.target,
        "script": ts.script,
        "guidelines": ts.guidelines,
        "models": ts.model_docs,
        "wrong_exemplars": ts.wrong_docs,
        "wrong_tags": ts.wrong_tags,
        "stats": {crit: _stats_to_blob(st) for crit, st in ts.stats.items()},
        "thresholds": {
            crit: {
                engine: {"t_cc": th.t_cc, "t_cw": th.t_cw}
                for engine, th in engines.items()
                if th is not None
            }
            for crit, engines in ts.thresholds.items()
        },
        "weights": ts.weights,
        "svm": {
            crit: {engine: _svm_to_blob(m) for engine, m in engines.items()}
            for crit, engines in ts.svms.items()
        },
    }


def template_from_document(doc: dict, config: PipelineConfig | None = None) -> TemplateSet:
    config = config or PipelineConfig()
    thresholds = {
        crit: {
            engine: Thresholds(t_cc=float(v["t_cc"]), t_cw=float(v["t_cw"]))
            for engine, v in engines.items()
        }
        for crit, engines in doc["thresholds"].items()
    }
    return TemplateSet(
        target=doc["target"],
        script=doc["script"],
        guidelines={k: float(v) for k, v in doc["guidelines"].items()},
        model_docs=list(doc["models"]),
        wrong_docs=list(doc["wrong_exemplars"]),
        wrong_tags=[list(tags) for tags in doc.get("wrong_tags", [])],
        stats={crit: _stats_from_blob(blob) for crit, blob in doc["stats"].items()},
        thresholds=thresholds,
        weights={c: {e: float(w) for e, w in ew.items()} for c, ew in doc["weights"].items()},
        svms={
            crit: {engine: _svm_from_blob(blob) for engine, blob in engines.items()}
            for crit, engines in doc["svm"].items()
        },
        config=config,
    )


def save_template(ts: TemplateSet, path: str | Path) -> None:
    text = json.dumps(template_to_document(ts), sort_keys=True, indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_template(path: str | Path, config: PipelineConfig | None = None) -> TemplateSet:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return template_from_document(doc, config)


def load_template_dir(path: str | Path, config: PipelineConfig | None = None) -> dict[str, TemplateSet]:
    path = Path(path)
    templates = {}
    for file in sorted(path.glob("*.json")):
        ts = load_template(file, config)
        templates[ts.target] = ts
    if not templates:
        raise ValueError(f"no template files in {path}")
    return templates


def _wrong_distance(mat, wrong_mats, selector, stats) -> float:
    """Distance from a sample to the wrong-exemplar set.

    The set is a collection of distinct ways to be wrong, not repetitions
    of one prototype, so averaging over members (the model-set rule)
    washes out the contrast; set distance is to the nearest member.
    """
    return min(sd_dd(mat, [w], selector, stats) for w in wrong_mats)


def _bem_score(
    features: SampleFeatures,
    ts: TemplateSet,
    criterion: str,
    selectors,
) -> float:
    selector = selectors[criterion]
    test = features.bem[criterion]
    if len(test) == 0:
        return 0.0
    model_mats = [mf.bem[criterion] for mf in ts.model_features() if len(mf.bem[criterion])]
    dd = sd_dd(test, model_mats, selector, ts.stats[criterion])
    ns1_value = ns1(dd, ts.thresholds[criterion]["bem"])
    wrong_mats = [
        wf.bem[criterion]
        for wf, tags in zip(ts.wrong_features(), ts.wrong_tags)
        if criterion in tags and len(wf.bem[criterion])
    ]
    th_wrong = ts.thresholds[criterion].get("bem_wrong")
    if not wrong_mats or th_wrong is None:
        # without counter-examples a distance far from the correct band
        # says "abnormal", not "this criterion is violated": the low half
        # of the scale is unattributable, so it bottoms out at don't-know
        return max(ns1_value, 0.5)
    dd_wrong = _wrong_distance(test, wrong_mats, selector, ts.stats[criterion])
    ns2_value = ns1(dd_wrong, th_wrong)
    return combined_score(ns1_value, ns2_value)


def _fdm_view(vec: np.ndarray, criterion: str) -> np.ndarray:
    """Criterion-focused slice of the descriptor feature vector.

    The full vector mixes the whole-trace signature, per-stroke harmonic
    rows and per-stroke layout.  Direction reads only the stroke
    endpoints and order only the layout: a reversal or swap moves just a
    handful of layout dimensions, and against the unchanged signature
    dims the kernel distance it causes would wash out.
    """
    if criterion == "shape":
        return vec
    idx = []
    for k in range(FDM_STROKE_SLOTS):
        base = COEFF_DIM + k * (COEFF_DIM + LAYOUT_DIMS) + COEFF_DIM
        if criterion == "direction":
            idx.extend(range(base + 2, base + LAYOUT_DIMS))
        else:
            idx.extend(range(base, base + LAYOUT_DIMS))
    return vec[idx]


def _engine_input(features: SampleFeatures, criterion: str, engine: str) -> np.ndarray:
    """Feature vector an engine classifies for one criterion.

    The image engine reads the guideline-anchored raster for position
    (the plain raster normalizes placement away) and the bounds-fitted
    raster everywhere else.
    """
    if engine == "fdm":
        return _fdm_view(features.fdm, criterion)
    if criterion == "position":
        return features.zone_pos
    return features.zone


def _engine_scores(features: SampleFeatures, ts: TemplateSet, selectors) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    for criterion in CRITERIA:
        scores: dict[str, float] = {}
        for engine in ENGINE_ASSIGNMENTS[criterion]:
            if engine == "bem":
                # one engine's perfect match must not outrank the cap the
                # classifier engines report under, or a glyph with a clean
                # shape could never lose the argmax to a detected defect
                scores["bem"] = min(
                    _bem_score(features, ts, criterion, selectors), CONF_CAP
                )
            else:
                model = ts.svms.get(criterion, {}).get(engine)
                if model is None:
                    continue
                x = _engine_input(features, criterion, engine)
                scores[engine] = float(confidence(model, x))
        out[criterion] = scores
    return out


def analyze(sample: InkSample, templates: TemplateSet, config: PipelineConfig | None = None) -> Verdict:
    """Score one drawing against its target's templates."""
    config = config or templates.config
    if sample.meta.target != templates.target:
        raise ValueError(
            f"sample target {sample.meta.target!r} does not match template {templates.target!r}"
        )
    selectors = default_selectors()
    features = extract_features(sample, config)
    per_engine = _engine_scores(features, ts=templates, selectors=selectors)
    fused = {
        crit: fuse(per_engine[crit], templates.weights[crit]) for crit in CRITERIA
    }
    class_index = classify_global(fused, shape_floor=config.shape_floor)
    scores_100 = {crit: round(100.0 * fused[crit], 4) for crit in CRITERIA}
    qual = {crit: qualitative(scores_100[crit]).as_dict() for crit in CRITERIA}
    return Verdict(
        class_index=class_index,
        class_label=CLASS_LABELS[class_index],
        scores=scores_100,
        qualitative=qual,
        warnings=tuple(features.warnings),
    )


def _split_fit_val(items: list) -> tuple[list, list]:
    n_val = max(1, len(items) // 3) if len(items) >= 3 else 0
    if n_val == 0:
        return items, []
    return items[:-n_val], items[-n_val:]


def _engine_weight(predictions: list[bool], truths: list[bool]) -> float:
    """Chance-corrected classification rate used as a fusion weight.

    The validation split is heavily imbalanced (one defect kind against
    everything else), so raw accuracy rewards engines that answer the
    same thing regardless of input.  Averaging the per-class hit rates
    puts a blind engine at 0.5; rescaling maps chance to the floor, and
    rates too close to chance for the handful of validation defects to
    vouch for are floored outright.
    """
    if not predictions:
        return WEIGHT_FLOOR
    rates = []
    for cls in (True, False):
        hits = [p == t for p, t in zip(predictions, truths) if t is cls]
        if hits:
            rates.append(sum(hits) / len(hits))
    balanced = sum(rates) / len(rates)
    if balanced < 0.75:
        return WEIGHT_FLOOR
    return max(2.0 * balanced - 1.0, WEIGHT_FLOOR)


def fit_templates(
    manifest: dict,
    corpus_dir: str | Path,
    config: PipelineConfig | None = None,
    targets: list[str] | None = None,
) -> dict[str, TemplateSet]:
    """Fit one template set per target from a labeled corpus.

    Train entries are split per class into a fit part and a validation
    part; thresholds and classifiers come from the fit part and the
    validation part supplies the fusion weights (per-engine correct
    classification rates).
    """
    config = config or PipelineConfig()
    corpus_dir = Path(corpus_dir)
    selectors = default_selectors()

    by_target: dict[str, list[dict]] = {}
    for entry in manifest["entries"]:
        if entry["split"] != "train":
            continue
        by_target.setdefault(entry["target"], []).append(entry)

    templates: dict[str, TemplateSet] = {}
    for target, entries in sorted(by_target.items()):
        if targets is not None and target not in targets:
            continue
        entries = sorted(entries, key=lambda e: e["path"])
        correct = [e for e in entries if e["class_index"] == 1]
        if len(correct) < config.n_models:
            raise ValueError(
                f"target {target!r} has {len(correct)} correct training samples; "
                f"need at least {config.n_models}"
            )

        cache: dict[str, tuple[dict, InkSample, SampleFeatures]] = {}
        for e in entries:
            raw = (corpus_dir / e["path"]).read_bytes()
            sample = read_sample(raw)
            cache[e["path"]] = (e, sample, extract_features(sample, config))

        fit_entries, val_entries = [], []
        by_class: dict[int, list[dict]] = {}
        for e in entries:
            by_class.setdefault(e["class_index"], []).append(e)
        for cls_entries in by_class.values():
            fit_part, val_part = _split_fit_val(cls_entries)
            fit_entries.extend(fit_part)
            val_entries.extend(val_part)
        fit_entries = sorted(fit_entries, key=lambda e: e["path"])
        val_entries = sorted(val_entries, key=lambda e: e["path"])

        fit_correct = [e for e in fit_entries if e["class_index"] == 1]

        # normalization constants reflect style spread among correct writings;
        # per criterion because direction rewrites the heading dimension
        stats = {
            crit: FeatureStats.from_matrices(
                [
                    cache[e["path"]][2].bem[crit]
                    for e in fit_entries
                    if e["class_index"] == 1 and len(cache[e["path"]][2].bem[crit])
                ]
            )
            for crit in CRITERIA
        }

        # reference models are the most mutually consistent correct
        # repetitions: picking an outlier instead would widen every band
        # and score poorly itself when analyzed against the other models
        def _spread(entry: dict) -> float:
            total = 0.0
            for other in fit_correct:
                if other is entry:
                    continue
                for crit in CRITERIA:
                    a = cache[entry["path"]][2].bem[crit]
                    b = cache[other["path"]][2].bem[crit]
                    if len(a) and len(b):
                        total += sd_dd(a, [b], selectors[crit], stats[crit])
            return total

        model_entries = sorted(fit_correct, key=_spread)[: config.n_models]
        model_entries.sort(key=lambda e: e["path"])
        model_feats = [cache[e["path"]][2] for e in model_entries]

        wrong_fit = [e for e in fit_entries if e["class_index"] != 1]
        wrong_sel: list[dict] = []
        wrong_tags: list[list[str]] = []
        per_crit_count: dict[str, int] = {c: 0 for c in CRITERIA}
        for e in wrong_fit:
            tags = [c for c in CRITERIA if not e["criteria"][c]]
            if not tags:
                continue
            if all(per_crit_count[t] >= config.n_wrong_exemplars for t in tags):
                continue
            wrong_sel.append(e)
            wrong_tags.append(tags)
            for t in tags:
                per_crit_count[t] += 1

        ts = TemplateSet(
            target=target,
            script=cache[model_entries[0]["path"]][1].meta.script,
            guidelines={
                "baseline_y": cache[model_entries[0]["path"]][1].guidelines.baseline_y,
                "median_top_y": cache[model_entries[0]["path"]][1].guidelines.median_top_y,
            },
            model_docs=[sample_to_document(cache[e["path"]][1]) for e in model_entries],
            wrong_docs=[sample_to_document(cache[e["path"]][1]) for e in wrong_sel],
            wrong_tags=wrong_tags,
            stats=stats,
            thresholds={},
            weights={},
            svms={},
            config=config,
        )
        ts._model_features = model_feats
        ts._wrong_features = [cache[e["path"]][2] for e in wrong_sel]

        # correct repetitions must not calibrate the correct-side quantiles
        # against a model set containing themselves: the zero self-distance
        # drags the quantiles down and the thresholds then reject unseen
        # correct writings.  The normalization stats keep the full set;
        # shrinking them per sample overshoots in the other direction.
        model_paths = [e["path"] for e in model_entries]

        # distance distributions and thresholds per criterion
        for criterion in CRITERIA:
            selector = selectors[criterion]
            model_mats = [mf.bem[criterion] for mf in model_feats if len(mf.bem[criterion])]
            wrong_mats = [
                wf.bem[criterion]
                for wf, tags in zip(ts.wrong_features(), ts.wrong_tags)
                if criterion in tags and len(wf.bem[criterion])
            ]
            dd_pos, dd_neg = [], []
            dd_pos_wrongset, dd_neg_wrongset = [], []
            for e in fit_entries:
                feats = cache[e["path"]][2]
                mat = feats.bem[criterion]
                if not len(mat):
                    continue
                if e["class_index"] == 1:
                    mats = [
                        mf.bem[criterion]
                        for p, mf in zip(model_paths, model_feats)
                        if p != e["path"] and len(mf.bem[criterion])
                    ] or model_mats
                    dd = sd_dd(mat, mats, selector, stats[criterion])
                else:
                    dd = sd_dd(mat, model_mats, selector, stats[criterion])
                to_wrong = None
                if wrong_mats:
                    exclude = None
                    if e in wrong_sel:
                        idx = wrong_sel.index(e)
                        if criterion in wrong_tags[idx]:
                            exclude = idx
                    mats = [
                        m
                        for k, (m, tags) in enumerate(
                            zip(
                                [wf.bem[criterion] for wf in ts.wrong_features()],
                                ts.wrong_tags,
                            )
                        )
                        if criterion in tags and len(m) and k != exclude
                    ]
                    if mats:
                        to_wrong = _wrong_distance(mat, mats, selector, stats[criterion])
                # the correct side of each distribution comes from fully
                # correct repetitions; samples wrong on some other criterion
                # drag their cross-talk into the quantiles otherwise
                if e["class_index"] == 1:
                    dd_pos.append(dd)
                elif not e["criteria"][criterion]:
                    dd_neg.append(dd)
                # the counter-score must separate this criterion's defects
                # from everything else, including samples whose defect lies
                # elsewhere, so the far side pools all bit-true samples
                if to_wrong is not None:
                    if not e["criteria"][criterion]:
                        dd_pos_wrongset.append(to_wrong)
                    else:
                        dd_neg_wrongset.append(to_wrong)
            crit_th: dict[str, Thresholds] = {}
            if dd_neg:
                # the wrong-side quantile already marks where defects start;
                # widening past it would hand defective writings credit
                th = compute_thresholds(dd_pos, dd_neg, config.u_max, config.u_min)
                crit_th["bem"] = th
            else:
                # no wrong evidence: a bare step at the correct quantile
                # would zero out slightly sloppier but fine writings, so
                # leave decay room above it
                hi = float(np.max(dd_pos)) if dd_pos else 1.0
                th = Thresholds(t_cc=hi, t_cw=2.0 * hi if hi > 0 else 1.0)
                crit_th["bem"] = Thresholds(th.t_cc, max(th.t_cw, BAND_EXPANSION * th.t_cc))
            if dd_pos_wrongset and dd_neg_wrongset:
                # the counter-score only helps when this criterion's defects
                # cluster: their leave-one-out distances must sit below every
                # other sample's distance to them, else it is noise
                separable = quantile(dd_pos_wrongset, config.u_max) <= quantile(
                    dd_neg_wrongset, config.u_min
                )
                if separable:
                    th_w = compute_thresholds(
                        dd_pos_wrongset, dd_neg_wrongset, config.u_max, config.u_min
                    )
                    # the gap between the two threshold quantiles is a
                    # no-man's land neither side's fit samples reached;
                    # unseen samples of both kinds drift into it, so the
                    # decay is confined to its middle tenth: half a margin
                    # of resemblance still commits the counter-score, half
                    # a margin of daylight already clears it
                    mid = 0.5 * (th_w.t_cc + th_w.t_cw)
                    half = 0.05 * (th_w.t_cw - th_w.t_cc)
                    crit_th["bem_wrong"] = Thresholds(mid - half, mid + half)
            ts.thresholds[criterion] = crit_th

        # per-criterion classifiers on the fit part
        for criterion in CRITERIA:
            engines: dict[str, SvmModel] = {}
            for engine in ENGINE_ASSIGNMENTS[criterion]:
                if engine == "bem":
                    continue
                x_rows, y_rows = [], []
                for e in fit_entries:
                    feats = cache[e["path"]][2]
                    x_rows.append(_engine_input(feats, criterion, engine))
                    y_rows.append(1 if e["criteria"][criterion] else 0)
                if len(set(y_rows)) < 2:
                    continue
                engines[engine] = train(
                    np.stack(x_rows), y_rows, c=config.svm_c, gamma=None
                )
            if engines:
                ts.svms[criterion] = engines

        # validation classification rates become the fusion weights
        for criterion in CRITERIA:
            weights: dict[str, float] = {}
            engine_names = [
                e
                for e in ENGINE_ASSIGNMENTS[criterion]
                if e == "bem" or ts.svms.get(criterion, {}).get(e) is not None
            ]
            truths = []
            preds: dict[str, list[bool]] = {e: [] for e in engine_names}
            for e in val_entries:
                feats = cache[e["path"]][2]
                truths.append(bool(e["criteria"][criterion]))
                for engine in engine_names:
                    if engine == "bem":
                        score = _bem_score(feats, ts, criterion, selectors)
                    else:
                        model = ts.svms[criterion][engine]
                        x = _engine_input(feats, criterion, engine)
                        score = float(confidence(model, x))
                    preds[engine].append(score >= 0.5)
            for engine in engine_names:
                weights[engine] = _engine_weight(preds[engine], truths)
            ts.weights[criterion] = weights

        templates[target] = ts
    if not templates:
        raise ValueError("no targets fitted; manifest had no matching train entries")
    return templates


def save_templates(templates: dict[str, TemplateSet], out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for target, ts in sorted(templates.items()):
        save_template(ts, out_dir / f"{target}.json")


def evaluate(
    manifest: dict,
    corpus_dir: str | Path,
    templates: dict[str, TemplateSet],
    config: PipelineConfig | None = None,
    split: str = "test",
) -> dict:
    """Run the pipeline over a corpus split and tally agreement.

    Returns global six-class accuracy, per-criterion binary rates and the
    mean score agreement against the ground-truth bits.
    """
    config = config or PipelineConfig()
    corpus_dir = Path(corpus_dir)
    n = 0
    class_hits = 0
    crit_hits = {c: 0 for c in CRITERIA}
    crit_total = {c: 0 for c in CRITERIA}
    agreements = []
    per_class: dict[int, list[int]] = {}
    for entry in manifest["entries"]:
        if entry["split"] != split or entry["target"] not in templates:
            continue
        sample = read_sample((corpus_dir / entry["path"]).read_bytes())
        verdict = analyze(sample, templates[entry["target"]], config)
        n += 1
        hit = verdict.class_index == entry["class_index"]
        class_hits += hit
        per_class.setdefault(entry["class_index"], []).append(int(hit))
        for crit in CRITERIA:
            truth = bool(entry["criteria"][crit])
            pred = verdict.scores[crit] >= 50.0
            crit_hits[crit] += pred == truth
            crit_total[crit] += 1
            agreements.append(1.0 - abs(verdict.scores[crit] / 100.0 - float(truth)))
    if n == 0:
        raise ValueError(f"no {split!r} entries for the fitted targets")
    return {
        "samples": n,
        "class_accuracy": class_hits / n,
        "per_class_accuracy": {
            cls: sum(v) / len(v) for cls, v in sorted(per_class.items())
        },
        "criterion_ccr": {c: crit_hits[c] / crit_total[c] for c in CRITERIA},
        "mean_score_agreement": float(np.mean(agreements)),
    }
