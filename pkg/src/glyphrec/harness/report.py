"""Evaluation records and their text / row renderings.

An :class:`EvalReport` holds one :class:`ClassifierResult` per evaluated
classifier. Each result carries per-split metrics (top-1, top-5, coverage
for the unanimous rule, a 49x49 confusion matrix) plus resource figures.
Wall-clock timings are kept apart from the deterministic part so that two
runs with the same seed serialize to identical bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

N_CLASSES = 49
SPLITS = ("test", "train")

# display names in the order of the printed table
DISPLAY_NAMES = {
    "mlp-shadow": "MLP (shadow)",
    "mlp-chain": "MLP (chain code histogram)",
    "mlp-view": "MLP (view based)",
    "mlp-longest_run": "MLP (longest run)",
    "ensemble-unanimous": "Min voting (unanimous)",
    "ensemble-any": "Max voting (any-vote)",
    "ensemble-weighted": "Weighted majority",
    "svm": "SVM",
}


@dataclass
class SplitMetrics:
    """Scores of one classifier on one split.

    ``confusion[t, p]`` counts samples of class ``t`` predicted as ``p``.
    For the unanimous rule rejected samples are not in ``confusion`` but in
    ``rejected[t]``, so ``confusion.sum(1) + rejected`` equals the class
    counts and ``trace / n`` is still the top-1 accuracy.
    """
    n: int
    top1: float
    top5: float
    confusion: np.ndarray
    coverage: Optional[float] = None
    rejected: Optional[np.ndarray] = None

    def to_dict(self):
        d = {"n": self.n, "top1": self.top1, "top5": self.top5,
             "confusion": self.confusion.tolist()}
        if self.coverage is not None:
            d["coverage"] = self.coverage
            d["rejected"] = self.rejected.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        rej = d.get("rejected")
        return cls(int(d["n"]), float(d["top1"]), float(d["top5"]),
                   np.array(d["confusion"], dtype=np.int64), d.get("coverage"),
                   None if rej is None else np.array(rej, dtype=np.int64))


def split_metrics(true, top1, top5_hit, rejected_mask=None, n_classes: int = N_CLASSES) -> SplitMetrics:
    """Build metrics from per-sample predictions.

    ``top1`` holds predicted labels (ignored where ``rejected_mask``),
    ``top5_hit`` whether the true label is among the top five.
    """
    true = np.asarray(true, dtype=np.int64)
    top1 = np.asarray(top1, dtype=np.int64)
    n = len(true)
    keep = np.ones(n, dtype=bool) if rejected_mask is None else ~np.asarray(rejected_mask, bool)
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(conf, (true[keep], top1[keep]), 1)
    correct = int(np.trace(conf))
    acc1 = correct / n if n else 0.0
    acc5 = float(np.mean(np.asarray(top5_hit, bool))) if n else 0.0
    if rejected_mask is None:
        return SplitMetrics(n, acc1, acc5, conf)
    rejected = np.bincount(true[~keep], minlength=n_classes).astype(np.int64)
    coverage = float(keep.mean()) if n else 0.0
    return SplitMetrics(n, acc1, acc5, conf, coverage, rejected)


@dataclass
class ClassifierResult:
    name: str
    splits: Dict[str, SplitMetrics] = field(default_factory=dict)
    storage_bytes: int = 0
    complexity: int = 0           # parameter count (MLP) or support vectors (SVM)
    complexity_unit: str = "params"
    train_seconds: Optional[float] = None
    predict_seconds: Optional[float] = None  # per sample

    def to_dict(self):
        return {"name": self.name,
                "splits": {k: v.to_dict() for k, v in self.splits.items()},
                "storage_bytes": self.storage_bytes,
                "complexity": self.complexity,
                "complexity_unit": self.complexity_unit}


@dataclass
class EvalReport:
    classifiers: List[ClassifierResult] = field(default_factory=list)
    meta: Dict[str, object] = field(default_factory=dict)

    def get(self, name: str) -> ClassifierResult:
        for c in self.classifiers:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> List[str]:
        return [c.name for c in self.classifiers]

    # deterministic part -------------------------------------------------
    def to_json(self) -> str:
        doc = {"meta": self.meta, "classifiers": [c.to_dict() for c in self.classifiers]}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def timings_json(self) -> str:
        doc = {c.name: {"train_seconds": c.train_seconds,
                        "predict_seconds_per_sample": c.predict_seconds}
               for c in self.classifiers}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str, timings: Optional[str] = None) -> "EvalReport":
        doc = json.loads(text)
        tim = json.loads(timings) if timings else {}
        out = []
        for c in doc["classifiers"]:
            t = tim.get(c["name"], {})
            out.append(ClassifierResult(
                c["name"], {k: SplitMetrics.from_dict(v) for k, v in c["splits"].items()},
                c["storage_bytes"], c["complexity"], c["complexity_unit"],
                t.get("train_seconds"), t.get("predict_seconds_per_sample")))
        return cls(out, doc.get("meta", {}))


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------

def pct(x: Optional[float]) -> str:
    """0.9238 -> '92.38%'."""
    if x is None:
        return "-"
    return f"{100.0 * x:.2f}%"


def _fmt_bytes(n: int) -> str:
    return f"{n / 1024:.1f} KiB" if n >= 1024 else f"{n} B"


def render_table(report: EvalReport, timings: bool = True) -> str:
    """Classifier x {test, training} table with top-1 and top-5 columns,
    followed by storage / complexity (and timing) columns."""
    heads = ["Classifier", "Test top1", "Test top5", "Train top1", "Train top5",
             "Coverage", "Storage", "Size"]
    show_time = timings and any(c.train_seconds is not None for c in report.classifiers)
    if show_time:
        heads += ["Train time", "Predict/sample"]
    rows = []
    for c in report.classifiers:
        te, tr = c.splits.get("test"), c.splits.get("train")
        cov = te.coverage if te is not None else None
        row = [DISPLAY_NAMES.get(c.name, c.name),
               pct(te.top1) if te else "-", pct(te.top5) if te else "-",
               pct(tr.top1) if tr else "-", pct(tr.top5) if tr else "-",
               pct(cov), _fmt_bytes(c.storage_bytes), f"{c.complexity} {c.complexity_unit}"]
        if show_time:
            row += ["-" if c.train_seconds is None else f"{c.train_seconds:.2f} s",
                    "-" if c.predict_seconds is None else f"{1000 * c.predict_seconds:.3f} ms"]
        rows.append(row)
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(heads)]

    def line(cells):
        return "  ".join(cells[0].ljust(widths[0]) if i == 0 else cells[i].rjust(widths[i])
                         for i in range(len(cells))).rstrip()

    out = [line(heads), line(["-" * w for w in widths])]
    out += [line(r) for r in rows]
    out.append("Train columns are resubstitution accuracy on the training split.")
    return "\n".join(out) + "\n"


def report_rows(report: EvalReport, timings: bool = False) -> List[tuple]:
    """One ``(classifier, split, metric, value)`` row per measured quantity."""
    rows = []
    for c in report.classifiers:
        for split in SPLITS:
            m = c.splits.get(split)
            if m is None:
                continue
            rows.append((c.name, split, "top1", m.top1))
            rows.append((c.name, split, "top5", m.top5))
            if m.coverage is not None:
                rows.append((c.name, split, "coverage", m.coverage))
        rows.append((c.name, "model", "storage_bytes", c.storage_bytes))
        rows.append((c.name, "model", c.complexity_unit, c.complexity))
        if timings and c.train_seconds is not None:
            rows.append((c.name, "model", "train_seconds", c.train_seconds))
            rows.append((c.name, "model", "predict_seconds_per_sample", c.predict_seconds))
    return rows


def render_rows(report: EvalReport, timings: bool = False) -> str:
    lines = ["classifier\tsplit\tmetric\tvalue"]
    for name, split, metric, value in report_rows(report, timings):
        v = repr(float(value)) if isinstance(value, float) else str(value)
        lines.append(f"{name}\t{split}\t{metric}\t{v}")
    return "\n".join(lines) + "\n"


def render(report: EvalReport, fmt: str = "text", timings: bool = True) -> str:
    if fmt == "text":
        return render_table(report, timings)
    if fmt == "rows":
        return render_rows(report, timings)
    raise ValueError(f"unknown report format {fmt!r}")
