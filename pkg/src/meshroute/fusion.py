"""Fused next-hop scoring: weighted model outputs, top-k shortlist, threshold fallback."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

VARIANTS = ("eq6", "abc", "abcd")


def score_eq6(a: float, b: float, c: float, d: float) -> float:
    return d + a - b - c / 100.0


def score_abc(a: float, b: float, c: float) -> float:
    return 0.5 * a - 0.25 * b - 0.25 * (c / 100.0)


def score_abcd(a: float, b: float, c: float, d: float) -> float:
    return 0.4 * d + 0.4 * a - 0.1 * b - 0.1 * (c / 100.0)


@dataclass(frozen=True)
class FusionWeights:
    w_d: float
    w_a: float
    w_b: float
    w_c: float
    delay_divisor: float = 100.0
    variant: str = "abcd"

    def __post_init__(self) -> None:
        if self.delay_divisor <= 0:
            raise ValueError("delay_divisor must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @classmethod
    def preset(cls, variant: str) -> "FusionWeights":
        return {
            "eq6": cls(1.0, 1.0, 1.0, 1.0, variant="eq6"),
            "abc": cls(0.0, 0.5, 0.25, 0.25, variant="abc"),
            "abcd": cls(0.4, 0.4, 0.1, 0.1, variant="abcd"),
        }[variant]

    def combine(self, a, b, c, d):
        """Weighted score; works elementwise on arrays."""
        return self.w_d * d + self.w_a * a - self.w_b * b - self.w_c * (c / self.delay_divisor)

    @property
    def uses_shortlist(self) -> bool:
        return self.variant != "abc"


@dataclass(frozen=True)
class FusionParams:
    weights: FusionWeights
    k: int = 3
    threshold: float = 0.0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @classmethod
    def for_mode(cls, mode: str, k: int = 3, threshold: float = 0.0) -> "FusionParams":
        variant = mode if mode in VARIANTS else "abcd"
        return cls(FusionWeights.preset(variant), k=k, threshold=threshold)


@dataclass(frozen=True)
class ScoreBreakdown:
    candidate_id: int
    a: float
    b: float
    c: float
    d: float
    combined: float

    def serialize(self) -> str:
        return f"{self.candidate_id}@{self.a:.6f}:{self.b:.6f}:{self.c:.6f}:{self.d:.6f}:{self.combined:.6f}"


@dataclass
class Decision:
    """Outcome of fused selection: a chosen id, or ``chosen=None`` meaning use the fallback."""

    chosen: Optional[int]
    breakdowns: List[ScoreBreakdown] = field(default_factory=list)

    @property
    def fallback(self) -> bool:
        return self.chosen is None

    def serialize(self) -> str:
        return "|".join(b.serialize() for b in self.breakdowns)


def rank_shortlist(candidates: Sequence[int], d_scores: Sequence[float], k: int) -> List[int]:
    """Positions of the top-k candidates by D score, descending, lower id first on ties."""
    order = sorted(range(len(candidates)), key=lambda i: (-d_scores[i], candidates[i]))
    return order[:k]


def select_from_scores(candidates: Sequence[int], a, b, c, d, params: FusionParams) -> Decision:
    """Selection given precomputed model outputs per candidate."""
    if len(candidates) == 0:
        return Decision(None)
    w = params.weights
    if w.uses_shortlist:
        idx = rank_shortlist(candidates, d, params.k)
    else:
        idx = list(range(len(candidates)))
    breakdowns = [
        ScoreBreakdown(int(candidates[i]), float(a[i]), float(b[i]), float(c[i]), float(d[i]),
                       float(w.combine(float(a[i]), float(b[i]), float(c[i]), float(d[i]))))
        for i in idx
    ]
    if not breakdowns:
        return Decision(None)
    best = min(breakdowns, key=lambda s: (-s.combined, s.candidate_id))
    if best.combined < params.threshold:
        return Decision(None, breakdowns)
    return Decision(best.candidate_id, breakdowns)


def select_forwarder(candidates: Sequence[int], features_per_candidate, bundle,
                     params: FusionParams) -> Decision:
    """Score candidates with the bundle's models and pick the best, or signal fallback."""
    if len(candidates) == 0:
        return Decision(None)
    X = np.asarray(features_per_candidate, dtype=float)
    a = bundle.predict_a(X)
    b = bundle.predict_b(X)
    c = bundle.predict_c(X)
    if params.weights.variant == "abc":
        d = np.zeros(len(candidates))
    else:
        d = bundle.predict_d(X)
    return select_from_scores(candidates, a, b, c, d, params)
