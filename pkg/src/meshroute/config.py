"""Pipeline configuration: one INI-style key-value file with every tunable constant.

Example::

    [scenarios]
    base_seed = 2025
    count = 10
    node_counts = 40, 49, 58, 67, 76, 84, 93, 102, 111, 120
    area = 200, 200
    buffer_capacity_range = 4, 20
    device_type_mix = 0.5, 0.3, 0.2

    [simulation]
    ttl_initial = 10
    buffer_retention_s = inf

    [fusion]
    k = 3
    threshold = 0.0
    abcd_weights = 0.4, 0.4, 0.1, 0.1    ; w_d, w_a, w_b, w_c

    [seeds]
    train = 42

Omitted keys keep their defaults; unknown sections or keys are rejected so
typos fail loudly.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .fusion import FusionParams, FusionWeights
from .scenario import ScenarioConfig, ScenarioError
from .sim_core import ConfigurationError, SimulationConfig


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    scenarios: List[ScenarioConfig]
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    abc_weights: FusionWeights = field(default_factory=lambda: FusionWeights.preset("abc"))
    abcd_weights: FusionWeights = field(default_factory=lambda: FusionWeights.preset("abcd"))
    k: int = 3
    threshold: float = 0.0
    train_seed: int = 42
    split_seed: int = 42
    train_fraction: float = 0.8
    bootstrap_seed: int = 0
    bootstrap_resamples: int = 10_000
    ci_level: float = 0.95

    def fusion_params(self, mode: str) -> FusionParams:
        weights = self.abc_weights if mode == "abc" else self.abcd_weights
        return FusionParams(weights, k=self.k, threshold=self.threshold)

    def validate(self) -> None:
        if not self.scenarios:
            raise ConfigError("at least one scenario is required")
        try:
            for s in self.scenarios:
                s.validate()
            self.simulation.validate()
            FusionParams(self.abcd_weights, self.k, self.threshold)
        except (ScenarioError, ConfigurationError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must be in (0, 1)")
        if not 0 < self.ci_level < 1:
            raise ConfigError("ci_level must be in (0, 1)")
        if self.bootstrap_resamples < 1:
            raise ConfigError("bootstrap_resamples must be >= 1")


def default_node_counts(count: int, lo: int = 40, hi: int = 120) -> List[int]:
    return [int(round(v)) for v in np.linspace(lo, hi, count)]


def default_config() -> PipelineConfig:
    return PipelineConfig(scenarios=_suite(2025, default_node_counts(10), ScenarioConfig(0, 2)))


def _suite(base_seed: int, node_counts: Sequence[int], proto: ScenarioConfig) -> List[ScenarioConfig]:
    return [dataclasses.replace(proto, seed=base_seed + i, node_count=int(n))
            for i, n in enumerate(node_counts)]


# ---- parsing ----------------------------------------------------------------

def _floats(text: str, n: Optional[int] = None) -> Tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} values, got {text!r}")
    return vals


def _ints(text: str, n: Optional[int] = None) -> Tuple[int, ...]:
    vals = _floats(text, n)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"expected integers, got {text!r}")
    return tuple(int(v) for v in vals)


def _int(text: str) -> int:
    return _ints(text, 1)[0]


def _float(text: str) -> float:
    return _floats(text, 1)[0]


_SIM_PARSERS = {
    "radius_m": _float,
    "ttl_initial": _int,
    "messages_per_scenario": _int,
    "base_hop_delay_s": _float,
    "queue_penalty_s": _float,
    "capability_weights": lambda t: _floats(t, 3),
    "workload_seed": _int,
    "message_interval_s": _float,
    "buffer_retention_s": _float,
}
_SECTIONS = {
    "scenarios": {"base_seed", "count", "node_counts", "area", "buffer_capacity_range",
                  "device_type_mix"},
    "simulation": set(_SIM_PARSERS),
    "fusion": {"k", "threshold", "abc_weights", "abcd_weights", "delay_divisor"},
    "seeds": {"train", "split", "bootstrap"},
    "training": {"fraction"},
    "statistics": {"resamples", "ci_level"},
}


def parse_config(text: str) -> PipelineConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        extra = set(cp[sec]) - _SECTIONS[sec]
        if extra:
            raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(sorted(extra))}")

    def get(sec, key):
        return cp[sec][key] if cp.has_option(sec, key) else None

    sc = cp["scenarios"] if cp.has_section("scenarios") else {}
    base_seed = _int(sc["base_seed"]) if "base_seed" in sc else 2025
    if "node_counts" in sc:
        counts = list(_ints(sc["node_counts"]))
        if "count" in sc and _int(sc["count"]) != len(counts):
            raise ConfigError("scenarios.count disagrees with the node_counts list")
    else:
        counts = default_node_counts(_int(sc["count"]) if "count" in sc else 10)
    proto = ScenarioConfig(0, 2)
    if "area" in sc:
        w, h = _floats(sc["area"], 2)
        proto = dataclasses.replace(proto, area_width=w, area_height=h)
    if "buffer_capacity_range" in sc:
        proto = dataclasses.replace(proto, buffer_capacity_range=_ints(sc["buffer_capacity_range"], 2))
    if "device_type_mix" in sc:
        proto = dataclasses.replace(proto, device_type_mix=_floats(sc["device_type_mix"], 3))

    sim_kw = {k: _SIM_PARSERS[k](v) for k, v in (cp["simulation"].items()
                                                   if cp.has_section("simulation") else [])}
    cfg = PipelineConfig(scenarios=_suite(base_seed, counts, proto),
                         simulation=SimulationConfig(**sim_kw))

    divisor = get("fusion", "delay_divisor")
    divisor = _float(divisor) if divisor is not None else 100.0
    for variant in ("abc", "abcd"):
        raw = get("fusion", f"{variant}_weights")
        base = FusionWeights.preset(variant)
        w = _floats(raw, 4) if raw is not None else (base.w_d, base.w_a, base.w_b, base.w_c)
        try:
            setattr(cfg, f"{variant}_weights", FusionWeights(*w, delay_divisor=divisor, variant=variant))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if get("fusion", "k") is not None:
        cfg.k = _int(get("fusion", "k"))
    if get("fusion", "threshold") is not None:
        cfg.threshold = _float(get("fusion", "threshold"))
    for key, attr in (("train", "train_seed"), ("split", "split_seed"), ("bootstrap", "bootstrap_seed")):
        if get("seeds", key) is not None:
            setattr(cfg, attr, _int(get("seeds", key)))
    if get("training", "fraction") is not None:
        cfg.train_fraction = _float(get("training", "fraction"))
    if get("statistics", "resamples") is not None:
        cfg.bootstrap_resamples = _int(get("statistics", "resamples"))
    if get("statistics", "ci_level") is not None:
        cfg.ci_level = _float(get("statistics", "ci_level"))
    cfg.validate()
    return cfg


def load_config(path: str | os.PathLike | None) -> PipelineConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        cfg = default_config()
        cfg.validate()
        return cfg
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _fmt(v) -> str:
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return repr(v) if isinstance(v, float) else str(v)


def config_to_text(cfg: PipelineConfig) -> str:
    """Serialize so that ``parse_config(config_to_text(c))`` reproduces ``c``.

    Every scenario must share area, capacity range and type mix, and seeds
    must be consecutive, which is all the file format can express.
    """
    first = cfg.scenarios[0]
    for i, s in enumerate(cfg.scenarios):
        same = (s.area_width, s.area_height, s.buffer_capacity_range, s.device_type_mix) == \
            (first.area_width, first.area_height, first.buffer_capacity_range, first.device_type_mix)
        if not same or s.seed != first.seed + i:
            raise ConfigError("scenario list is not expressible as a uniform suite")
    sim = cfg.simulation
    lines = [
        "[scenarios]",
        f"base_seed = {first.seed}",
        f"count = {len(cfg.scenarios)}",
        f"node_counts = {_fmt([s.node_count for s in cfg.scenarios])}",
        f"area = {_fmt((first.area_width, first.area_height))}",
        f"buffer_capacity_range = {_fmt(tuple(first.buffer_capacity_range))}",
        f"device_type_mix = {_fmt(tuple(first.device_type_mix))}",
        "",
        "[simulation]",
        *(f"{k} = {_fmt(getattr(sim, k))}" for k in _SIM_PARSERS),
        "",
        "[fusion]",
        f"k = {cfg.k}",
        f"threshold = {_fmt(float(cfg.threshold))}",
        f"delay_divisor = {_fmt(float(cfg.abcd_weights.delay_divisor))}",
    ]
    for variant in ("abc", "abcd"):
        w = getattr(cfg, f"{variant}_weights")
        lines.append(f"{variant}_weights = {_fmt((w.w_d, w.w_a, w.w_b, w.w_c))}")
    lines += [
        "",
        "[seeds]",
        f"train = {cfg.train_seed}",
        f"split = {cfg.split_seed}",
        f"bootstrap = {cfg.bootstrap_seed}",
        "",
        "[training]",
        f"fraction = {_fmt(float(cfg.train_fraction))}",
        "",
        "[statistics]",
        f"resamples = {cfg.bootstrap_resamples}",
        f"ci_level = {_fmt(float(cfg.ci_level))}",
    ]
    return "\n".join(lines) + "\n"
