"""Soft-margin kernel SVM trained by sequential minimal optimization.

Binary machines solve the dual of the C-SVM problem two multipliers at a
time, picking the maximal KKT-violating pair on each step (Keerthi et al.'s
refinement of Platt's SMO). Multiclass models combine binary machines
one-vs-rest or one-vs-one.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, EmptyGrid, NonPositiveC, SingleClassData

log = logging.getLogger(__name__)

N_CLASSES = 49
SV_THRESHOLD = 1e-8
OVR, OVO = "ovr", "ovo"


@dataclass(frozen=True)
class Kernel:
    """``linear``: x.y, ``rbf``: exp(-|x-y|^2 / (2 sigma^2)), ``poly``: (x.y + 1)^d."""

    name: str = "linear"
    sigma: float = 1.0
    degree: int = 2

    def __post_init__(self):
        if self.name not in ("linear", "rbf", "poly"):
            raise ValueError(f"unknown kernel {self.name!r}")
        if self.name == "rbf" and not self.sigma > 0:
            raise ValueError("rbf sigma must be positive")
        if self.name == "poly" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError("poly degree must be an integer >= 1")

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def rbf(cls, sigma: float):
        return cls("rbf", sigma=float(sigma))

    @classmethod
    def poly(cls, degree: int = 2):
        return cls("poly", degree=int(degree))

    @classmethod
    def default_for(cls, name: str, dim: int, sigma=None, degree=None):
        if name == "rbf":
            return cls.rbf(sigma if sigma is not None else math.sqrt(dim) / 2)
        if name == "poly":
            return cls.poly(degree if degree is not None else 2)
        return cls.linear()

    def gram(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        if a.shape[1] != b.shape[1]:
            raise DimensionMismatch("kernel arguments differ in dimension")
        dot = a @ b.T
        if self.name == "linear":
            return dot
        if self.name == "poly":
            return (dot + 1.0) ** self.degree
        sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * dot
        return np.exp(-np.maximum(sq, 0.0) / (2.0 * self.sigma ** 2))


def kernel_eval(k: Kernel, x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch("kernel arguments differ in dimension")
    if k.name == "linear":
        return float(x @ y)
    if k.name == "poly":
        return float((x @ y + 1.0) ** k.degree)
    d = x - y
    return float(math.exp(-(d @ d) / (2.0 * k.sigma ** 2)))


@dataclass
class TrainInfo:
    iterations: int
    converged: bool
    gap: float
    alphas: np.ndarray
    objective: List[float] = field(default_factory=list)


@dataclass
class SvmBinaryModel:
    support_vectors: np.ndarray
    coef: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: Kernel
    c: float
    sv_index: np.ndarray  # rows of the training matrix the SVs came from
    info: Optional[TrainInfo] = field(default=None, compare=False, repr=False)

    def decision(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.support_vectors.shape[0] == 0:
            return np.full(x.shape[0], self.bias)
        if x.shape[1] != self.support_vectors.shape[1]:
            raise DimensionMismatch("input dimension differs from training data")
        return self.kernel.gram(x, self.support_vectors) @ self.coef + self.bias

    @property
    def n_sv(self) -> int:
        return int(self.coef.size)


def dual_objective(alphas: np.ndarray, y: np.ndarray, gram: np.ndarray) -> float:
    """sum(alpha) - 0.5 * sum_ij alpha_i alpha_j y_i y_j K_ij."""
    ay = alphas * y
    return float(alphas.sum() - 0.5 * ay @ gram @ ay)


def train_binary(x, y, kernel: Kernel = Kernel(), c: float = 1.0, tol: float = 1e-3,
                 max_iter: Optional[int] = None, gram: Optional[np.ndarray] = None,
                 record_objective: bool = False) -> SvmBinaryModel:
    """Train one soft-margin machine on labels in {-1, +1}.

    Stops once the maximal KKT violation gap is <= ``tol``; at that point
    every sample satisfies its KKT condition within ``tol``. Multipliers
    above 1e-8 are kept as support vectors.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if not c > 0:
        raise NonPositiveC("c must be positive")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise SingleClassData("both labels -1 and +1 are required")
    if not np.all(np.abs(y) == 1):
        raise ValueError("binary labels must be -1 or +1")
    n = len(y)
    k = kernel.gram(x, x) if gram is None else gram
    if max_iter is None:
        max_iter = max(100_000, 100 * n)

    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a
    diag = np.diag(k).copy()
    objective = [0.0] if record_objective else []
    it, gap, converged = 0, math.inf, False
    while it < max_iter:
        v = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        vu = np.where(up, v, -np.inf)
        vl = np.where(low, v, np.inf)
        i, j = int(np.argmax(vu)), int(np.argmin(vl))
        gap = vu[i] - vl[j]
        if gap <= tol:
            converged = True
            break
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            lo, hi = max(0.0, aj - ai), min(c, c + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - c), min(c, ai + aj)
        eta = max(diag[i] + diag[j] - 2.0 * k[i, j], 1e-12)
        ei, ej = y[i] * grad[i], y[j] * grad[j]
        aj_new = min(max(aj + y[j] * (ei - ej) / eta, lo), hi)
        ai_new = ai + y[i] * y[j] * (aj - aj_new)
        # snap to the box so bound multipliers are exactly 0 or c
        ai_new = min(max(ai_new, 0.0), c)
        if ai_new < 1e-12 * c:
            ai_new = 0.0
        elif ai_new > c * (1 - 1e-12):
            ai_new = c
        d_i, d_j = ai_new - ai, aj_new - aj
        if d_i == 0.0 and d_j == 0.0:
            log.warning("SMO stalled at gap %.3g after %d iterations", gap, it)
            break
        alpha[i], alpha[j] = ai_new, aj_new
        grad += y * (y[i] * d_i * k[:, i] + y[j] * d_j * k[:, j])
        it += 1
        if record_objective:
            objective.append(float(0.5 * alpha.sum() - 0.5 * alpha @ grad))
    else:
        log.warning("SMO hit max_iter=%d with gap %.3g", max_iter, gap)

    v = -y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        bias = float(v[free].mean())
    else:
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        m = v[up].max() if up.any() else v[low].min()
        mm = v[low].min() if low.any() else v[up].max()
        bias = float((m + mm) / 2)
    keep = np.flatnonzero(alpha > SV_THRESHOLD)
    info = TrainInfo(it, converged, float(gap), alpha.copy(), objective)
    return SvmBinaryModel(x[keep].copy(), alpha[keep] * y[keep], bias, kernel, float(c),
                          keep, info)


def kkt_violations(model: SvmBinaryModel, x, y, tol: float = 1e-3, rows=None) -> np.ndarray:
    """Indices of training samples breaking their KKT condition by more than ``tol``.

    ``rows`` gives the position of each sample in the frame ``sv_index``
    refers to (machines of a multiclass model index the full training
    matrix); by default the samples are that frame.
    """
    y = np.asarray(y, dtype=np.float64)
    rows = np.arange(len(y)) if rows is None else np.asarray(rows, dtype=np.int64)
    full = np.zeros(max(int(rows.max(initial=-1)), int(model.sv_index.max(initial=-1))) + 1)
    full[model.sv_index] = np.abs(model.coef)
    alpha = full[rows]
    margin = y * model.decision(x)
    at_zero = alpha <= SV_THRESHOLD
    at_c = alpha >= model.c - SV_THRESHOLD
    free = ~at_zero & ~at_c
    bad = (at_zero & (margin < 1 - tol)) | (free & (np.abs(margin - 1) > tol)) \
        | (at_c & (margin > 1 + tol))
    return np.flatnonzero(bad)


@dataclass
class SvmModel:
    scheme: str
    classes: Tuple[int, ...]
    machines: List[Tuple[Tuple[int, ...], SvmBinaryModel]]
    n_classes: int = N_CLASSES

    @property
    def n_sv(self) -> int:
        return sum(m.n_sv for _, m in self.machines)

    @property
    def dimension(self) -> int:
        for _, m in self.machines:
            return m.support_vectors.shape[1]
        return 0


def machine_samples(key, labels) -> Tuple[np.ndarray, np.ndarray]:
    """Training rows and +-1 targets a multiclass machine was fit on."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(key) == 1:
        return np.arange(len(labels)), np.where(labels == key[0], 1.0, -1.0)
    idx = np.flatnonzero((labels == key[0]) | (labels == key[1]))
    return idx, np.where(labels[idx] == key[0], 1.0, -1.0)


def audit_kkt(model: "SvmModel", x, labels, tol: float = 1e-3) -> Dict[Tuple[int, ...], np.ndarray]:
    """KKT violators (training row indices) of every machine; empty arrays mean a clean audit."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = {}
    for key, machine in model.machines:
        idx, yy = machine_samples(key, labels)
        out[key] = idx[kkt_violations(machine, x[idx], yy, tol, rows=idx)]
    return out


def train_multiclass(x, labels, scheme: str = OVR, kernel: Kernel = Kernel(), c: float = 1.0,
                     tol: float = 1e-3, jobs: int = 1, n_classes: int = N_CLASSES) -> SvmModel:
    """One-vs-rest (one machine per present class) or one-vs-one (one per pair)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    classes = tuple(int(v) for v in np.unique(labels))
    if len(classes) < 2:
        raise SingleClassData("at least two classes are required")
    if scheme not in (OVR, OVO):
        raise ValueError(f"unknown scheme {scheme!r}")
    gram = kernel.gram(x, x)

    if scheme == OVR:
        jobs_args = [((cls,), np.arange(len(labels)), np.where(labels == cls, 1.0, -1.0))
                     for cls in classes]
    else:
        jobs_args = []
        for a, b in combinations(classes, 2):
            idx = np.flatnonzero((labels == a) | (labels == b))
            jobs_args.append(((a, b), idx, np.where(labels[idx] == a, 1.0, -1.0)))

    def fit(args):
        key, idx, yy = args
        machine = train_binary(x[idx], yy, kernel, c, tol, gram=gram[np.ix_(idx, idx)])
        machine.sv_index = idx[machine.sv_index]
        return key, machine

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            machines = list(pool.map(fit, jobs_args))
    else:
        machines = [fit(a) for a in jobs_args]
    return SvmModel(scheme, classes, machines, n_classes)


def decision_scores(model: SvmModel, x) -> Tuple[np.ndarray, np.ndarray]:
    """Per-class scores for a batch and the tie-break key.

    One-vs-rest: decision values (classes without a machine get -inf).
    One-vs-one: pairwise vote counts, with summed signed decision values as
    the secondary key.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if model.dimension and x.shape[1] != model.dimension:
        raise DimensionMismatch(f"model expects {model.dimension} features")
    n = x.shape[0]
    if model.scheme == OVR:
        scores = np.full((n, model.n_classes), -np.inf)
        for (cls,), m in model.machines:
            scores[:, cls] = m.decision(x)
        return scores, np.zeros_like(scores)
    votes = np.zeros((n, model.n_classes))
    sums = np.zeros((n, model.n_classes))
    for (a, b), m in model.machines:
        f = m.decision(x)
        win_a = f > 0
        votes[:, a] += win_a
        votes[:, b] += ~win_a
        sums[:, a] += f
        sums[:, b] -= f
    return votes, sums


def rank(model: SvmModel, x) -> Tuple[np.ndarray, np.ndarray]:
    """Class rankings (best first, lowest index on full ties) and scores."""
    scores, secondary = decision_scores(model, x)
    idx = np.arange(model.n_classes)
    order = np.array([np.lexsort((idx, -secondary[r], -scores[r])) for r in range(len(scores))])
    return order.reshape(len(scores), model.n_classes), scores


def predict(model: SvmModel, x) -> Tuple[int, np.ndarray]:
    order, scores = rank(model, x)
    return int(order[0, 0]), scores[0]


def predict_batch(model: SvmModel, x) -> np.ndarray:
    order, _ = rank(model, x)
    return order[:, 0]


def accuracy(model: SvmModel, x, labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    return float(np.mean(predict_batch(model, x) == labels))


def select_c(train: Tuple[np.ndarray, np.ndarray], selection: Tuple[np.ndarray, np.ndarray],
             grid: Sequence[float], kernel: Kernel = Kernel(), scheme: str = OVR,
             tol: float = 1e-3) -> float:
    """Grid value with the best selection-set top-1 accuracy; ties -> smallest c."""
    if len(grid) == 0:
        raise EmptyGrid("the c grid is empty")
    sx, sy = selection
    if len(sy) == 0:
        raise ValueError("selection split is empty")
    best_c, best_acc = None, -1.0
    for cval in sorted(float(g) for g in grid):
        model = train_multiclass(train[0], train[1], scheme, kernel, cval, tol)
        acc = accuracy(model, sx, sy)
        log.info("c=%g selection accuracy %.4f", cval, acc)
        if acc > best_acc:
            best_c, best_acc = cval, acc
    return best_c
