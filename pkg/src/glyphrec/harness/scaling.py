"""Per-feature min-max scaling fitted on the training split."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ScalerModel:
    mins: np.ndarray
    maxs: np.ndarray
    clamp: bool = True

    @classmethod
    def fit(cls, x, clamp: bool = True) -> "ScalerModel":
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[0] == 0:
            raise ValueError("cannot fit a scaler on zero samples")
        return cls(x.min(axis=0), x.max(axis=0), clamp)

    def transform(self, x) -> np.ndarray:
        """Map training values into [0, 1]; constant features map to 0.
        Unseen values outside the training range are clamped unless
        ``clamp`` is off."""
        x = np.asarray(x, dtype=np.float64)
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = np.where(span > 0, (x - self.mins) / safe, 0.0)
        if self.clamp:
            out = np.clip(out, 0.0, 1.0)
        return out

    @property
    def dimension(self) -> int:
        return int(self.mins.size)

    @staticmethod
    def concat(scalers) -> "ScalerModel":
        scalers = list(scalers)
        return ScalerModel(np.concatenate([s.mins for s in scalers]),
                           np.concatenate([s.maxs for s in scalers]),
                           all(s.clamp for s in scalers))
