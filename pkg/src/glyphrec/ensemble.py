"""Decision fusion for the four feature-wise MLP experts.

Three rules are provided: unanimous voting (accept only when every expert
agrees), any-vote (the true class counts as found if any expert names it)
and weighted majority voting with competence weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import AllZeroAccuracies
from .features import KINDS, FeatureKind

BINARY_VOTES = "binary"
SOFT_SCORES = "soft"


@dataclass(frozen=True)
class ExpertDecision:
    expert: FeatureKind
    label: int
    scores: np.ndarray

    @classmethod
    def from_scores(cls, expert: FeatureKind, scores) -> "ExpertDecision":
        scores = np.asarray(scores, dtype=np.float64)
        return cls(expert, int(np.argmax(scores)), scores)


@dataclass(frozen=True)
class FusionWeights:
    weights: Mapping[FeatureKind, float]

    def __post_init__(self):
        w = dict(self.weights)
        if set(w) != set(KINDS):
            raise ValueError("one weight per feature kind is required")
        if any(v < 0 for v in w.values()):
            raise ValueError("weights must be non-negative")
        if abs(sum(w.values()) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "weights", w)

    def __getitem__(self, kind: FeatureKind) -> float:
        return self.weights[kind]

    def as_list(self):
        return [self.weights[k] for k in KINDS]

    @classmethod
    def uniform(cls) -> "FusionWeights":
        return cls({k: 0.25 for k in KINDS})


# Competence weights from the original four-expert study, by feature kind.
PRESET_WEIGHT_TEXT = {
    FeatureKind.CHAIN_HISTOGRAM: "0.316",
    FeatureKind.SHADOW: "0.303",
    FeatureKind.VIEW_BASED: "0.241",
    FeatureKind.LONGEST_RUN: "0.140",
}
PRESET_WEIGHTS = FusionWeights({k: float(v) for k, v in PRESET_WEIGHT_TEXT.items()})


def preset_weight_total() -> Decimal:
    """Exact decimal sum of the preset weights."""
    return sum((Decimal(v) for v in PRESET_WEIGHT_TEXT.values()), Decimal(0))


@dataclass(frozen=True)
class FusedDecision:
    top1: Optional[int]  # None means rejected
    ranking: np.ndarray
    combined: np.ndarray
    candidates: Tuple[int, ...] = ()

    @property
    def rejected(self) -> bool:
        return self.top1 is None

    def top(self, k: int) -> np.ndarray:
        return self.ranking[:k]


def _order(primary, secondary=None) -> np.ndarray:
    idx = np.arange(len(primary))
    if secondary is None:
        secondary = np.zeros(len(primary))
    return np.lexsort((idx, -np.asarray(secondary), -np.asarray(primary)))


def _summed(decisions: Sequence[ExpertDecision]) -> np.ndarray:
    return np.sum([d.scores for d in decisions], axis=0)


def fuse_unanimous(decisions: Sequence[ExpertDecision]) -> FusedDecision:
    """Accept the label only if all experts agree, otherwise reject.
    The ranking always follows the summed soft scores."""
    total = _summed(decisions)
    labels = {d.label for d in decisions}
    top1 = labels.pop() if len(labels) == 1 else None
    return FusedDecision(top1, _order(total), total, tuple(sorted({d.label for d in decisions})))


def fuse_any(decisions: Sequence[ExpertDecision]) -> FusedDecision:
    """Candidates are the distinct expert labels; the candidate with the
    highest summed soft score becomes top-1. Use :func:`any_vote_hit` for
    the membership (oracle) accounting."""
    total = _summed(decisions)
    candidates = tuple(sorted({d.label for d in decisions}))
    top1 = max(candidates, key=lambda c: (total[c], -c))
    return FusedDecision(top1, _order(total), total, candidates)


def any_vote_hit(fused: FusedDecision, true_label: int) -> bool:
    return int(true_label) in fused.candidates


def fuse_weighted(decisions: Sequence[ExpertDecision], weights: FusionWeights,
                  mode: str = BINARY_VOTES) -> FusedDecision:
    """Weighted majority voting: ``combined_i = sum_k w_k * d_ik``.

    With binary votes ``d_ik`` is 1 when expert ``k`` chose class ``i``; with
    soft scores it is the expert's score. Ranks tied on ``combined`` (all
    unvoted classes, under binary votes) are ordered by summed soft score,
    then by class index.
    """
    n = len(decisions[0].scores)
    combined = np.zeros(n)
    for d in decisions:
        w = weights[d.expert]
        if mode == BINARY_VOTES:
            combined[d.label] += w
        elif mode == SOFT_SCORES:
            combined += w * d.scores
        else:
            raise ValueError(f"unknown fusion mode {mode!r}")
    ranking = _order(combined, _summed(decisions))
    return FusedDecision(int(ranking[0]), ranking, combined,
                         tuple(sorted({d.label for d in decisions})))


def derive_weights(accuracies: Mapping[FeatureKind, float]) -> FusionWeights:
    """``w_k = d_k / sum(d)`` from per-expert accuracies."""
    acc = {k: float(accuracies[k]) for k in KINDS}
    if any(v < 0 for v in acc.values()):
        raise ValueError("accuracies must be non-negative")
    total = sum(acc.values())
    if total <= 0:
        raise AllZeroAccuracies("at least one expert accuracy must be positive")
    w = {k: v / total for k, v in acc.items()}
    # push the rounding residue onto the largest weight so the sum is 1
    top = max(KINDS, key=lambda k: w[k])
    w[top] += 1.0 - sum(w.values())
    return FusionWeights(w)


def decisions_from_scores(scores: Mapping[FeatureKind, np.ndarray]) -> Dict[FeatureKind, ExpertDecision]:
    return {k: ExpertDecision.from_scores(k, s) for k, s in scores.items()}
