"""End-to-end training and evaluation.

preprocess -> four feature kinds -> per-kind min-max scaling (fit on the
training split) -> one MLP expert per kind + fusion -> SVM on the
concatenated (or one) feature kind -> evaluation on the test and training
splits -> persisted models and reports.

Configuration is JSON. Every key is optional; the defaults reproduce the
synthetic 10-class benchmark. Schema (defaults shown)::

    {
      "seed": 0,
      "data": {"manifest": null,
               "synthetic": {"classes": 10, "per_class": 70, "noise": 0.02}},
      "split": {"train_fraction": 0.7142857142857143, "selection_fraction": 0.0,
                "stratified": true, "preset": null, "test_on_train": false},
      "preprocess": {"clean": false},
      "scaling": {"clamp": true},
      "classifier": "all",                      # mlp-ensemble | svm | all
      "mlp": {"hidden_dim": 40, "epochs": 60, "learning_rate": 0.3,
              "momentum": 0.7, "patience": null},
      "fusion": {"rule": "weighted", "weights": "auto", "mode": "binary"},
      "svm": {"kernel": "rbf", "c": 10.0, "c_grid": null, "sigma": null,
              "degree": null, "scheme": "ovr", "features": "concat", "tol": 0.001},
      "jobs": 1,
      "output": "run"
    }

``data.manifest`` (a CSV manifest or class-per-folder directory) takes
precedence over ``data.synthetic``. ``fusion.weights`` is ``auto``
(competence weights from expert accuracies on the selection split, or on
the training split when there is none), ``preset`` or ``uniform``.
"""
from __future__ import annotations

import copy
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .. import mlp, svm
from ..ensemble import (PRESET_WEIGHTS, ExpertDecision, FusionWeights, derive_weights,
                        fuse_any, fuse_unanimous, fuse_weighted)
from ..errors import ConfigInvalid
from ..features import KINDS, FeatureKind, extract_all
from ..imagecore import preprocess, read_image
from . import container
from .dataset import SPLIT_PRESETS, Split, SplitSpec, ingest, split
from .report import ClassifierResult, EvalReport, render_rows, render_table, split_metrics
from .scaling import ScalerModel
from .synth import synth_glyphs

log = logging.getLogger(__name__)

CLASSIFIERS = ("mlp-ensemble", "svm", "all")
FUSION_RULES = ("unanimous", "any", "weighted")
KERNELS = ("linear", "rbf", "poly")

DEFAULT_CONFIG = {
    "seed": 0,
    "data": {"manifest": None,
             "synthetic": {"classes": 10, "per_class": 70, "noise": 0.02}},
    "split": {"train_fraction": 5 / 7, "selection_fraction": 0.0, "stratified": True,
              "preset": None, "test_on_train": False},
    "preprocess": {"clean": False},
    "scaling": {"clamp": True},
    "classifier": "all",
    "mlp": {"hidden_dim": 40, "epochs": 60, "learning_rate": 0.3, "momentum": 0.7,
            "patience": None},
    "fusion": {"rule": "weighted", "weights": "auto", "mode": "binary"},
    "svm": {"kernel": "rbf", "c": 10.0, "c_grid": None, "sigma": None, "degree": None,
            "scheme": "ovr", "features": "concat", "tol": 1e-3},
    "jobs": 1,
    "output": "run",
}


def _merge(base: dict, over: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigInvalid(f"unknown config key {where}{k!r}")
        if isinstance(base[k], dict) and base[k] and isinstance(v, dict):
            out[k] = _merge(base[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


@dataclass
class PipelineConfig:
    raw: dict

    @classmethod
    def from_dict(cls, d: Optional[dict] = None) -> "PipelineConfig":
        cfg = cls(_merge(DEFAULT_CONFIG, d or {}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigInvalid(f"cannot read config {path}: {e}") from e
        if not isinstance(d, dict):
            raise ConfigInvalid("config must be a JSON object")
        return cls.from_dict(d)

    def override(self, **flags) -> "PipelineConfig":
        """Apply CLI-style overrides; ``None`` values are ignored."""
        d = copy.deepcopy(self.raw)
        if flags.get("seed") is not None:
            d["seed"] = flags["seed"]
        if flags.get("classifier") is not None:
            d["classifier"] = flags["classifier"]
        if flags.get("fusion") is not None:
            d["fusion"]["rule"] = flags["fusion"]
        if flags.get("kernel") is not None:
            d["svm"]["kernel"] = flags["kernel"]
        if flags.get("output") is not None:
            d["output"] = str(flags["output"])
        if flags.get("manifest") is not None:
            d["data"]["manifest"] = str(flags["manifest"])
        if flags.get("jobs") is not None:
            d["jobs"] = flags["jobs"]
        return PipelineConfig.from_dict(d)

    def __getitem__(self, key):
        return self.raw[key]

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=1, sort_keys=True) + "\n"

    def validate(self):
        d = self.raw
        try:
            if not isinstance(d["seed"], int) or d["seed"] < 0:
                raise ConfigInvalid("seed must be a non-negative integer")
            if d["classifier"] not in CLASSIFIERS:
                raise ConfigInvalid(f"classifier must be one of {CLASSIFIERS}")
            if d["fusion"]["rule"] not in FUSION_RULES:
                raise ConfigInvalid(f"fusion.rule must be one of {FUSION_RULES}")
            if d["fusion"]["weights"] not in ("auto", "preset", "uniform"):
                raise ConfigInvalid("fusion.weights must be auto, preset or uniform")
            if d["fusion"]["mode"] not in ("binary", "soft"):
                raise ConfigInvalid("fusion.mode must be binary or soft")
            s = d["svm"]
            if s["kernel"] not in KERNELS:
                raise ConfigInvalid(f"svm.kernel must be one of {KERNELS}")
            if s["scheme"] not in (svm.OVR, svm.OVO):
                raise ConfigInvalid("svm.scheme must be ovr or ovo")
            if s["features"] != "concat":
                FeatureKind.parse(s["features"])
            if s["c_grid"] is None and not s["c"] > 0:
                raise ConfigInvalid("svm.c must be positive")
            if s["c_grid"] is not None and (not s["c_grid"] or min(s["c_grid"]) <= 0):
                raise ConfigInvalid("svm.c_grid must be a non-empty list of positive values")
            m = d["mlp"]
            if m["hidden_dim"] < 1 or m["epochs"] < 0 or m["learning_rate"] <= 0 \
                    or not 0 <= m["momentum"] < 1:
                raise ConfigInvalid("invalid mlp hyperparameters")
            if d["jobs"] < 1:
                raise ConfigInvalid("jobs must be >= 1")
            sp = d["split"]
            if sp["preset"] is not None and sp["preset"] not in SPLIT_PRESETS:
                raise ConfigInvalid(f"split.preset must be one of {sorted(SPLIT_PRESETS)}")
            self.split_spec()
            if d["data"]["manifest"] is None:
                syn = d["data"]["synthetic"]
                if not 1 <= syn["classes"] <= 49 or syn["per_class"] < 0 \
                        or not 0 <= syn["noise"] < 1:
                    raise ConfigInvalid("invalid synthetic data settings")
            if s["c_grid"] is not None and not sp["selection_fraction"] > 0:
                raise ConfigInvalid("svm.c_grid needs a selection split")
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ConfigInvalid):
                raise
            raise ConfigInvalid(f"invalid config: {e}") from e

    def split_spec(self) -> SplitSpec:
        sp = self.raw["split"]
        if sp["preset"] is not None:
            base = SPLIT_PRESETS[sp["preset"]]
            return SplitSpec(base.train_fraction, sp["selection_fraction"], self.raw["seed"],
                             sp["stratified"])
        return SplitSpec(sp["train_fraction"], sp["selection_fraction"], self.raw["seed"],
                         sp["stratified"])


# --------------------------------------------------------------------------
# data and features
# --------------------------------------------------------------------------

@dataclass
class Corpus:
    ids: List[str]
    labels: np.ndarray
    gray: List[np.ndarray]


def load_corpus(cfg: PipelineConfig) -> Corpus:
    data = cfg["data"]
    if data["manifest"] is not None:
        man = ingest(data["manifest"], check_images=False)
        gray = [read_image(man.resolve(e)) for e in man.entries]
        return Corpus([e.path for e in man.entries], man.labels, gray)
    syn = data["synthetic"]
    ds = synth_glyphs(syn["classes"], syn["per_class"], syn["noise"], cfg["seed"])
    if len(ds) == 0:
        from ..errors import NoSamples
        raise NoSamples("synthetic corpus is empty")
    # same path as images read from disk: ink 0, paper 255
    gray = [np.where(img, 0, 255).astype(np.uint8) for img in ds.images]
    return Corpus(ds.names, ds.labels, gray)


def _features_one(args):
    gray, clean = args
    vecs = extract_all(preprocess(gray, clean))
    return [vecs[k].values for k in KINDS]


def compute_features(gray_images, clean: bool = False, jobs: int = 1) -> Dict[FeatureKind, np.ndarray]:
    """Feature matrices (one row per image) for all four kinds."""
    args = [(g, clean) for g in gray_images]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_features_one, args, chunksize=16))
    else:
        rows = [_features_one(a) for a in args]
    return {k: np.array([r[i] for r in rows], dtype=np.float64).reshape(len(rows), k.dimension)
            for i, k in enumerate(KINDS)}


def expert_seed(seed: int, kind: FeatureKind) -> int:
    return int(np.random.SeedSequence([seed, KINDS.index(kind)]).generate_state(1)[0])


# --------------------------------------------------------------------------
# trained bundle
# --------------------------------------------------------------------------

@dataclass
class Bundle:
    """Everything needed to classify new glyphs."""
    scalers: Dict[FeatureKind, ScalerModel]
    experts: Dict[FeatureKind, mlp.MlpModel]
    weights: Optional[FusionWeights]
    svm_model: Optional[svm.SvmModel]
    svm_features: str = "concat"
    fusion_rule: str = "weighted"
    fusion_mode: str = "binary"
    clean: bool = False

    def scaled(self, feats: Dict[FeatureKind, np.ndarray]) -> Dict[FeatureKind, np.ndarray]:
        return {k: self.scalers[k].transform(feats[k]) for k in KINDS}

    def svm_input(self, scaled: Dict[FeatureKind, np.ndarray]) -> np.ndarray:
        if self.svm_features == "concat":
            return np.hstack([scaled[k] for k in KINDS])
        return scaled[FeatureKind.parse(self.svm_features)]

    def expert_scores(self, scaled) -> Dict[FeatureKind, np.ndarray]:
        return {k: mlp.forward(self.experts[k], scaled[k]) for k in self.experts}

    def save(self, out_dir) -> Dict[str, int]:
        """Write every model file; returns the byte size of each."""
        out = Path(out_dir) / "models"
        sizes = {}
        for k in KINDS:
            blob = container.dump_scaler(self.scalers[k])
            container.write_atomic(out / f"scaler-{k.value}.glrc", blob)
            sizes[f"scaler-{k.value}"] = len(blob)
        for k, m in self.experts.items():
            blob = container.dump_mlp(m)
            container.write_atomic(out / f"mlp-{k.value}.glrc", blob)
            sizes[f"mlp-{k.value}"] = len(blob)
        if self.svm_model is not None:
            blob = container.dump_svm(self.svm_model)
            container.write_atomic(out / "svm.glrc", blob)
            sizes["svm"] = len(blob)
        meta = {"svm_features": self.svm_features, "fusion_rule": self.fusion_rule,
                "fusion_mode": self.fusion_mode, "clean": self.clean,
                "weights": None if self.weights is None else
                {k.value: self.weights[k] for k in KINDS}}
        container.write_atomic(out / "bundle.json",
                               (json.dumps(meta, indent=1, sort_keys=True) + "\n").encode())
        return sizes

    @classmethod
    def load(cls, out_dir) -> "Bundle":
        """Load from a run directory or from its ``models`` subdirectory."""
        out = Path(out_dir)
        if not (out / "bundle.json").exists():
            out = out / "models"
        if not (out / "bundle.json").exists():
            raise FileNotFoundError(f"no model bundle under {out_dir}")
        meta = json.loads((out / "bundle.json").read_text())
        scalers = {k: container.load_scaler((out / f"scaler-{k.value}.glrc").read_bytes())
                   for k in KINDS}
        experts = {k: container.load_mlp((out / f"mlp-{k.value}.glrc").read_bytes())
                   for k in KINDS if (out / f"mlp-{k.value}.glrc").exists()}
        svm_path = out / "svm.glrc"
        svm_model = container.load_svm(svm_path.read_bytes()) if svm_path.exists() else None
        w = meta["weights"]
        weights = None if w is None else FusionWeights({FeatureKind(k): v for k, v in w.items()})
        return cls(scalers, experts, weights, svm_model, meta["svm_features"],
                   meta["fusion_rule"], meta["fusion_mode"], meta["clean"])

    def classify(self, gray: np.ndarray, classifier: str = "mlp-ensemble",
                 rule: Optional[str] = None) -> dict:
        """Top-5 prediction for one gray image."""
        feats = compute_features([gray], self.clean)
        scaled = self.scaled(feats)
        if classifier == "svm":
            if self.svm_model is None:
                raise ConfigInvalid("no SVM model in this bundle")
            order, _ = svm.rank(self.svm_model, self.svm_input(scaled))
            return {"classifier": "svm", "top1": int(order[0, 0]),
                    "top5": [int(v) for v in order[0, :5]]}
        if not self.experts:
            raise ConfigInvalid("no MLP experts in this bundle")
        rule = rule or self.fusion_rule
        scores = self.expert_scores(scaled)
        decisions = [ExpertDecision.from_scores(k, scores[k][0]) for k in KINDS]
        fused = _fuse(decisions, rule, self.weights, self.fusion_mode)
        return {"classifier": f"ensemble-{rule}", "top1": fused.top1,
                "top5": [int(v) for v in fused.top(5)],
                "experts": {k.value: d.label for k, d in zip(KINDS, decisions)}}


def _fuse(decisions, rule, weights, mode):
    if rule == "unanimous":
        return fuse_unanimous(decisions)
    if rule == "any":
        return fuse_any(decisions)
    return fuse_weighted(decisions, weights, mode)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def _ranked_metrics(scores: np.ndarray, labels: np.ndarray):
    idx = np.arange(scores.shape[1])
    order = np.array([np.lexsort((idx, -row)) for row in scores]).reshape(scores.shape)
    top5 = (order[:, :5] == labels[:, None]).any(axis=1)
    return split_metrics(labels, order[:, 0], top5)


def evaluate_experts(bundle: Bundle, scaled, labels) -> Dict[str, object]:
    """Metrics for every expert and every fusion rule on one split."""
    scores = bundle.expert_scores(scaled)
    out = {f"mlp-{k.value}": _ranked_metrics(scores[k], labels) for k in KINDS}
    n = len(labels)
    una_pred = np.zeros(n, dtype=np.int64)
    una_rej = np.zeros(n, dtype=bool)
    una_top5 = np.zeros(n, dtype=bool)
    any_pred = np.zeros(n, dtype=np.int64)
    any_top5 = np.zeros(n, dtype=bool)
    w_pred = np.zeros(n, dtype=np.int64)
    w_top5 = np.zeros(n, dtype=bool)
    for i in range(n):
        t = int(labels[i])
        dec = [ExpertDecision.from_scores(k, scores[k][i]) for k in KINDS]
        u = fuse_unanimous(dec)
        una_rej[i] = u.rejected
        una_pred[i] = -1 if u.rejected else u.top1
        una_top5[i] = (u.top1 == t) or t in u.top(5)
        a = fuse_any(dec)
        hit = t in a.candidates
        # an any-vote hit counts as correct, otherwise the best candidate is the answer
        any_pred[i] = t if hit else a.top1
        any_top5[i] = hit or t in a.top(5)
        w = fuse_weighted(dec, bundle.weights, bundle.fusion_mode)
        w_pred[i] = w.top1
        w_top5[i] = t in w.top(5)
    una_pred[una_rej] = 0
    out["ensemble-unanimous"] = split_metrics(labels, una_pred, una_top5, una_rej)
    out["ensemble-any"] = split_metrics(labels, any_pred, any_top5)
    out["ensemble-weighted"] = split_metrics(labels, w_pred, w_top5)
    return out


def evaluate_svm(bundle: Bundle, scaled, labels):
    order, _ = svm.rank(bundle.svm_model, bundle.svm_input(scaled))
    top5 = (order[:, :5] == labels[:, None]).any(axis=1)
    return split_metrics(labels, order[:, 0], top5)


# --------------------------------------------------------------------------
# the pipeline
# --------------------------------------------------------------------------

@dataclass
class PipelineResult:
    report: EvalReport
    bundle: Bundle
    split: Split
    out_dir: Optional[Path]


def _fit_weights(cfg, experts, scaled, labels, part):
    choice = cfg["fusion"]["weights"]
    if choice == "preset":
        return PRESET_WEIGHTS, "preset"
    if choice == "uniform":
        return FusionWeights.uniform(), "uniform"
    idx, source = (part.selection, "selection") if len(part.selection) else (part.train, "train")
    acc = {k: mlp.accuracy(experts[k], scaled[k][idx], labels[idx]) for k in KINDS}
    return derive_weights(acc), source


def run_pipeline(cfg: PipelineConfig, out_dir=None, corpus: Optional[Corpus] = None) -> PipelineResult:
    """Train, evaluate and (when ``out_dir`` is given) persist everything.

    Given the same config the persisted models and ``report.json`` are
    byte-identical across runs; wall-clock figures go to ``timings.json``.
    """
    seed = cfg["seed"]
    corpus = corpus if corpus is not None else load_corpus(cfg)
    labels = np.asarray(corpus.labels, dtype=np.int64)
    part = split(labels, cfg.split_spec())
    if cfg["split"]["test_on_train"]:
        part = Split(part.train, part.selection, part.train.copy())

    t0 = time.perf_counter()
    feats = compute_features(corpus.gray, cfg["preprocess"]["clean"], cfg["jobs"])
    t_features = time.perf_counter() - t0
    per_sample_feat = t_features / max(len(labels), 1)

    clamp = cfg["scaling"]["clamp"]
    scalers = {k: ScalerModel.fit(feats[k][part.train], clamp) for k in KINDS}
    scaled = {k: scalers[k].transform(feats[k]) for k in KINDS}

    want_mlp = cfg["classifier"] in ("mlp-ensemble", "all")
    want_svm = cfg["classifier"] in ("svm", "all")
    bundle = Bundle(scalers, {}, None, None, cfg["svm"]["features"], cfg["fusion"]["rule"],
                    cfg["fusion"]["mode"], cfg["preprocess"]["clean"])
    timings = {}
    meta = {"seed": seed, "n_samples": int(len(labels)),
            "n_train": int(len(part.train)), "n_selection": int(len(part.selection)),
            "n_test": int(len(part.test)), "classes": sorted(int(c) for c in np.unique(labels)),
            "test_on_train": bool(cfg["split"]["test_on_train"])}

    if want_mlp:
        m = cfg["mlp"]
        for k in KINDS:
            mc = mlp.MlpConfig(k.dimension, m["hidden_dim"], mlp.N_CLASSES, m["learning_rate"],
                               m["momentum"], m["epochs"], expert_seed(seed, k))
            stop = None
            if m["patience"] is not None and len(part.selection):
                stop = mlp.plateau_stopper(scaled[k][part.selection], labels[part.selection],
                                           m["patience"])
            t0 = time.perf_counter()
            bundle.experts[k] = mlp.train(list(zip(scaled[k][part.train], labels[part.train])),
                                          mc, stop)
            timings[f"mlp-{k.value}"] = time.perf_counter() - t0
            log.info("expert %s trained in %.2f s", k.value, timings[f"mlp-{k.value}"])
        bundle.weights, source = _fit_weights(cfg, bundle.experts, scaled, labels, part)
        meta["fusion_weights"] = {k.value: bundle.weights[k] for k in KINDS}
        meta["fusion_weights_source"] = source

    if want_svm:
        s = cfg["svm"]
        x = bundle.svm_input(scaled)
        kernel = svm.Kernel.default_for(s["kernel"], x.shape[1], s["sigma"], s["degree"])
        t0 = time.perf_counter()
        c = s["c"]
        if s["c_grid"] is not None:
            c = svm.select_c((x[part.train], labels[part.train]),
                             (x[part.selection], labels[part.selection]),
                             s["c_grid"], kernel, s["scheme"], s["tol"])
        bundle.svm_model = svm.train_multiclass(x[part.train], labels[part.train], s["scheme"],
                                                kernel, c, s["tol"], cfg["jobs"])
        timings["svm"] = time.perf_counter() - t0
        meta["svm"] = {"c": c, "kernel": kernel.name, "sigma": kernel.sigma,
                       "degree": kernel.degree, "features": s["features"], "scheme": s["scheme"]}

    sizes = bundle.save(out_dir) if out_dir is not None else _sizes_in_memory(bundle)

    # evaluation
    results: Dict[str, ClassifierResult] = {}
    predict_time = {}
    for split_name, idx in (("test", part.test), ("train", part.train)):
        sub = {k: scaled[k][idx] for k in KINDS}
        y = labels[idx]
        if want_mlp:
            t0 = time.perf_counter()
            metrics = evaluate_experts(bundle, sub, y)
            if split_name == "test":
                predict_time["mlp"] = (time.perf_counter() - t0) / max(len(y), 1)
            for name, mt in metrics.items():
                results.setdefault(name, ClassifierResult(name)).splits[split_name] = mt
        if want_svm:
            t0 = time.perf_counter()
            mt = evaluate_svm(bundle, sub, y)
            if split_name == "test":
                predict_time["svm"] = (time.perf_counter() - t0) / max(len(y), 1)
            results.setdefault("svm", ClassifierResult("svm")).splits[split_name] = mt

    scaler_bytes = sum(v for k, v in sizes.items() if k.startswith("scaler-"))
    for name, r in results.items():
        if name.startswith("mlp-"):
            kind = FeatureKind(name[4:])
            r.storage_bytes = sizes[name] + sizes[f"scaler-{kind.value}"]
            r.complexity = bundle.experts[kind].n_params
            r.train_seconds = timings[name]
            r.predict_seconds = predict_time["mlp"] + per_sample_feat
        elif name.startswith("ensemble-"):
            r.storage_bytes = scaler_bytes + sum(sizes[f"mlp-{k.value}"] for k in KINDS)
            r.complexity = sum(e.n_params for e in bundle.experts.values())
            r.train_seconds = sum(timings[f"mlp-{k.value}"] for k in KINDS)
            r.predict_seconds = predict_time["mlp"] + per_sample_feat
        else:
            r.storage_bytes = sizes["svm"] + scaler_bytes
            r.complexity = bundle.svm_model.n_sv
            r.complexity_unit = "SVs"
            r.train_seconds = timings["svm"]
            r.predict_seconds = predict_time["svm"] + per_sample_feat
    order = [f"mlp-{k.value}" for k in KINDS] + \
        ["ensemble-unanimous", "ensemble-any", "ensemble-weighted", "svm"]
    report = EvalReport([results[n] for n in order if n in results], meta)

    out = None
    if out_dir is not None:
        out = Path(out_dir)
        write_outputs(out, cfg, part, report)
    return PipelineResult(report, bundle, part, out)


def _sizes_in_memory(bundle: Bundle) -> Dict[str, int]:
    sizes = {f"scaler-{k.value}": len(container.dump_scaler(bundle.scalers[k])) for k in KINDS}
    sizes.update({f"mlp-{k.value}": len(container.dump_mlp(m)) for k, m in bundle.experts.items()})
    if bundle.svm_model is not None:
        sizes["svm"] = len(container.dump_svm(bundle.svm_model))
    return sizes


def write_outputs(out: Path, cfg: PipelineConfig, part: Split, report: EvalReport) -> None:
    def text(name, s):
        container.write_atomic(out / name, s.encode("utf-8"))

    text("config.json", cfg.to_json())
    text("split.json", json.dumps(part.to_dict()) + "\n")
    text("report.json", report.to_json())
    text("report.txt", render_table(report, timings=False))
    text("report.tsv", render_rows(report))
    text("timings.json", report.timings_json())


def evaluate_bundle(bundle: Bundle, corpus: Corpus, jobs: int = 1) -> EvalReport:
    """Score a saved bundle on every sample of ``corpus`` (reported as the test split)."""
    labels = np.asarray(corpus.labels, dtype=np.int64)
    feats = compute_features(corpus.gray, bundle.clean, jobs)
    scaled = bundle.scaled(feats)
    results = []
    if bundle.experts:
        for name, mt in evaluate_experts(bundle, scaled, labels).items():
            results.append(ClassifierResult(name, {"test": mt}))
    if bundle.svm_model is not None:
        results.append(ClassifierResult("svm", {"test": evaluate_svm(bundle, scaled, labels)},
                                        complexity=bundle.svm_model.n_sv, complexity_unit="SVs"))
    for r in results:
        if r.name.startswith("mlp-"):
            r.complexity = bundle.experts[FeatureKind(r.name[4:])].n_params
        elif r.name.startswith("ensemble-"):
            r.complexity = sum(e.n_params for e in bundle.experts.values())
    sizes = _sizes_in_memory(bundle)
    scaler_bytes = sum(v for k, v in sizes.items() if k.startswith("scaler-"))
    for r in results:
        if r.name == "svm":
            r.storage_bytes = sizes["svm"] + scaler_bytes
        elif r.name.startswith("mlp-"):
            r.storage_bytes = sizes[r.name] + sizes["scaler-" + r.name[4:]]
        else:
            r.storage_bytes = scaler_bytes + sum(sizes[f"mlp-{k.value}"] for k in bundle.experts)
    return EvalReport(results, {"n_samples": int(len(labels))})
