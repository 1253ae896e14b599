"""Three-layer sigmoid perceptron trained by online backpropagation with momentum."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, EmptyDataset

log = logging.getLogger(__name__)

N_CLASSES = 49


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_dim: int = 40
    output_dim: int = N_CLASSES
    learning_rate: float = 0.8
    momentum: float = 0.7
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if min(self.input_dim, self.hidden_dim, self.output_dim) < 1:
            raise ValueError("layer sizes must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class MlpModel:
    w1: np.ndarray  # hidden x input
    b1: np.ndarray
    w2: np.ndarray  # output x hidden
    b2: np.ndarray
    config: MlpConfig
    loss_history: List[float] = field(default_factory=list, compare=False, repr=False)

    def params(self) -> Tuple[np.ndarray, ...]:
        return self.w1, self.b1, self.w2, self.b2

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def copy(self) -> "MlpModel":
        return replace(self, w1=self.w1.copy(), b1=self.b1.copy(), w2=self.w2.copy(),
                       b2=self.b2.copy(), loss_history=list(self.loss_history))


@dataclass
class MlpGradient:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def params(self) -> Tuple[np.ndarray, ...]:
        return self.w1, self.b1, self.w2, self.b2


def init_model(cfg: MlpConfig) -> MlpModel:
    """Weights and biases drawn uniformly from [-0.5, 0.5] with ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    return _init(cfg, rng)


def _init(cfg, rng):
    u = lambda *shape: rng.uniform(-0.5, 0.5, size=shape)
    return MlpModel(u(cfg.hidden_dim, cfg.input_dim), u(cfg.hidden_dim),
                    u(cfg.output_dim, cfg.hidden_dim), u(cfg.output_dim), cfg)


def _check(model: MlpModel, x) -> np.ndarray:
    x = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if x.shape[-1:] != (model.config.input_dim,):
        raise DimensionMismatch(
            f"model expects {model.config.input_dim} inputs, got {x.shape[-1:]}")
    return x


def _hidden(model, x):
    return expit(x @ model.w1.T + model.b1)


def forward(model: MlpModel, x) -> np.ndarray:
    """Sigmoid output scores; ``x`` may be one vector or a batch of rows."""
    x = _check(model, x)
    return expit(_hidden(model, x) @ model.w2.T + model.b2)


def predict(model: MlpModel, x) -> Tuple[int, np.ndarray]:
    """Maximum-response label (lowest index wins ties) and the score vector."""
    scores = forward(model, x)
    return int(np.argmax(scores)), scores


def backward(model: MlpModel, x, output_error) -> MlpGradient:
    """Backpropagate ``dL/dy`` (``output_error``) through the network for one sample."""
    x = _check(model, x)
    h = _hidden(model, x)
    y = expit(model.w2 @ h + model.b2)
    delta_out = np.asarray(output_error, dtype=np.float64) * y * (1.0 - y)
    delta_hid = (model.w2.T @ delta_out) * h * (1.0 - h)
    return MlpGradient(np.outer(delta_hid, x), delta_hid, np.outer(delta_out, h), delta_out)


def gradient(model: MlpModel, x, target) -> MlpGradient:
    """Exact gradient of ``0.5 * ||target - y||^2`` with respect to every parameter."""
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (model.config.output_dim,):
        raise DimensionMismatch(f"target needs {model.config.output_dim} entries")
    y = forward(model, x)
    return backward(model, x, y - target)


def sse(model: MlpModel, xs: np.ndarray, labels: Sequence[int]) -> float:
    """Mean over samples of ``0.5 * ||t - y||^2`` with one-hot targets."""
    y = forward(model, xs)
    t = np.zeros_like(y)
    t[np.arange(len(labels)), labels] = 1.0
    return float(0.5 * ((t - y) ** 2).sum(axis=1).mean())


def train(data, cfg: MlpConfig,
          on_epoch: Optional[Callable[[int, float, MlpModel], Optional[bool]]] = None) -> MlpModel:
    """Online backpropagation with momentum.

    ``data`` is a sequence of ``(vector, label)`` pairs. Each update is
    ``dw = -lr * grad + momentum * dw_prev``; samples are reshuffled every
    epoch by the RNG seeded from ``cfg.seed`` (after initialization).
    ``on_epoch(epoch, loss, model)`` may return True to stop early.
    """
    if len(data) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    xs = np.array([np.asarray(getattr(x, "values", x), dtype=np.float64) for x, _ in data])
    labels = np.array([int(y) for _, y in data])
    if xs.ndim != 2 or xs.shape[1] != cfg.input_dim:
        raise DimensionMismatch(f"expected {cfg.input_dim}-dimensional inputs")
    if labels.min() < 0 or labels.max() >= cfg.output_dim:
        raise ValueError(f"labels must lie in [0, {cfg.output_dim})")

    rng = np.random.default_rng(cfg.seed)
    model = _init(cfg, rng)
    w1, b1, w2, b2 = model.params()
    v1, vb1, v2, vb2 = (np.zeros_like(p) for p in model.params())
    lr, mom = cfg.learning_rate, cfg.momentum
    targets = np.eye(cfg.output_dim)[labels]

    for epoch in range(cfg.epochs):
        for i in rng.permutation(len(xs)):
            x, t = xs[i], targets[i]
            h = expit(w1 @ x + b1)
            y = expit(w2 @ h + b2)
            d_out = (y - t) * y * (1.0 - y)
            d_hid = (w2.T @ d_out) * h * (1.0 - h)
            v2 *= mom
            v2 -= lr * np.outer(d_out, h)
            vb2 *= mom
            vb2 -= lr * d_out
            v1 *= mom
            v1 -= lr * np.outer(d_hid, x)
            vb1 *= mom
            vb1 -= lr * d_hid
            w2 += v2
            b2 += vb2
            w1 += v1
            b1 += vb1
        loss = sse(model, xs, labels)
        model.loss_history.append(loss)
        log.debug("epoch %d loss %.6f", epoch, loss)
        if on_epoch is not None and on_epoch(epoch, loss, model):
            break
    return model


def accuracy(model: MlpModel, xs: np.ndarray, labels: Sequence[int]) -> float:
    if len(labels) == 0:
        return 0.0
    pred = np.argmax(forward(model, xs), axis=1)
    return float(np.mean(pred == np.asarray(labels)))


def plateau_stopper(valid_x, valid_y, patience: int = 10):
    """``on_epoch`` callback stopping once validation accuracy has not
    improved for ``patience`` epochs."""
    state = {"best": -1.0, "since": 0}

    def cb(epoch, loss, model):
        acc = accuracy(model, valid_x, valid_y)
        if acc > state["best"]:
            state["best"], state["since"] = acc, 0
        else:
            state["since"] += 1
        return state["since"] >= patience

    return cb
