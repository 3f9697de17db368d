"""Per-candidate routing features and the min-max normalizer used by the forwarder model."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from typing import Sequence, Tuple

import numpy as np

FEATURE_NAMES = (
    "ttl_left",
    "hop_count",
    "distance_to_target",
    "success_rate_origin",
    "priority_tolerance",
    "uptime_ratio",
    "buffer_ratio",
    "device_type_encoded",
)
N_FEATURES = len(FEATURE_NAMES)

DEVICE_TYPE_CODES = {"phone": 0, "relay": 1, "sensor": 2}


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    ttl_left: int
    hop_count: int
    distance_to_target: float
    success_rate_origin: float
    priority_tolerance: float
    uptime_ratio: float
    buffer_ratio: float
    device_type_encoded: int

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def is_valid(self) -> bool:
        fracs = (self.success_rate_origin, self.priority_tolerance,
                 self.uptime_ratio, self.buffer_ratio)
        return (self.ttl_left >= 0 and self.hop_count >= 0
                and self.distance_to_target >= 0
                and all(0.0 <= f <= 1.0 for f in fracs)
                and self.device_type_encoded in (0, 1, 2))

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "FeatureVector":
        if len(values) != N_FEATURES:
            raise FeatureError(f"expected {N_FEATURES} values, got {len(values)}")
        v = list(values)
        return cls(int(v[0]), int(v[1]), float(v[2]), float(v[3]), float(v[4]),
                   float(v[5]), float(v[6]), int(v[7]))


assert tuple(f.name for f in fields(FeatureVector)) == FEATURE_NAMES


def ttl_left(ttl_initial: int, hop_count: int) -> int:
    if hop_count > ttl_initial:
        raise FeatureError(f"hop_count {hop_count} exceeds ttl_initial {ttl_initial}")
    return ttl_initial - hop_count


def distance_to_target(neighbor_pos: Tuple[float, float],
                       receiver_pos: Tuple[float, float]) -> float:
    return math.hypot(receiver_pos[0] - neighbor_pos[0], receiver_pos[1] - neighbor_pos[1])


def success_rate_origin(succeeded: float, attempted: float, prior: float = 0.0) -> float:
    """Delivered fraction; ``prior`` stands in before any attempt."""
    if attempted <= 0:
        return prior
    return succeeded / attempted


def uptime_ratio(active_s: float, total_s: float, prior: float = 1.0) -> float:
    if total_s <= 0:
        return prior
    return active_s / total_s


def buffer_ratio(used: int, capacity: int) -> float:
    if capacity < 1:
        raise FeatureError("buffer capacity must be >= 1")
    if not 0 <= used <= capacity:
        raise FeatureError(f"buffer_used {used} outside [0, {capacity}]")
    return used / capacity


def encode_device_type(device_type: str) -> int:
    try:
        return DEVICE_TYPE_CODES[device_type]
    except KeyError:
        raise FeatureError(f"unknown device type {device_type!r}") from None


def extract_features(origin_state, candidate_state, message, receiver_spec,
                     now: float | None = None) -> FeatureVector:
    """Features for forwarding ``message`` from ``origin_state`` to ``candidate_state``.

    Origin supplies success rate and uptime; the candidate supplies buffer
    load, device type, priority tolerance and its distance to the receiver.
    Neither state is mutated.
    """
    cand = candidate_state.spec
    return FeatureVector(
        ttl_left=ttl_left(message.ttl_initial, message.hop_count),
        hop_count=message.hop_count,
        distance_to_target=distance_to_target(cand.position, receiver_spec.position),
        success_rate_origin=origin_state.success_rate(),
        priority_tolerance=cand.priority_tolerance,
        uptime_ratio=origin_state.uptime(now),
        buffer_ratio=buffer_ratio(candidate_state.buffer_used, cand.buffer_capacity),
        device_type_encoded=encode_device_type(cand.device_type),
    )


@dataclass(frozen=True)
class Normalizer:
    mins: Tuple[float, ...]
    maxs: Tuple[float, ...]

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        lo = np.asarray(self.mins)
        span = np.asarray(self.maxs) - lo
        safe = np.where(span > 0, span, 1.0)
        out = np.where(span > 0, (X - lo) / safe, 0.0)
        return np.clip(out, 0.0, 1.0)


def fit_normalizer(X) -> Normalizer:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise FeatureError("cannot fit a normalizer on an empty dataset")
    return Normalizer(tuple(float(v) for v in X.min(axis=0)),
                      tuple(float(v) for v in X.max(axis=0)))


def apply_normalizer(n: Normalizer, v) -> np.ndarray:
    return n.transform(v)
