"""Node-deployment scenarios: seeded generation and CSV persistence.

A scenario file has one row per device with the columns in ``COLUMNS``.
Fractional fields and coordinates are written with six decimals; generated
values are rounded to that precision up front so save/load round-trips
exactly.

Sampling uses numpy's PCG64 bit generator (``numpy.random.default_rng``).
Columns are drawn in ``COLUMNS`` order, one vectorised draw per column, so
a config's seed fully determines the scenario.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np

COLUMNS = (
    "device_id",
    "x_position",
    "y_position",
    "battery_level",
    "signal_quality",
    "success_rate",
    "device_type",
    "priority_tolerance",
    "buffer_capacity",
    "uptime_ratio",
)
FRACTION_FIELDS = (
    "battery_level",
    "signal_quality",
    "success_rate",
    "priority_tolerance",
    "uptime_ratio",
)
DEVICE_TYPES = ("phone", "sensor", "relay")
DECIMALS = 6


class ScenarioError(ValueError):
    """Invalid scenario content or configuration."""


class SchemaError(ScenarioError):
    """Scenario file header does not match the expected columns."""


@dataclass(frozen=True)
class DeviceSpec:
    device_id: int
    x_position: float
    y_position: float
    battery_level: float
    signal_quality: float
    success_rate: float
    device_type: str
    priority_tolerance: float
    buffer_capacity: int
    uptime_ratio: float

    def validate(self, row: int | None = None) -> None:
        where = f" (row {row})" if row is not None else ""
        if self.device_id < 1:
            raise ScenarioError(f"device_id must be >= 1{where}")
        for name in FRACTION_FIELDS:
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0) or math.isnan(value):
                raise ScenarioError(f"{name}={value} outside [0, 1]{where}")
        if self.buffer_capacity < 1:
            raise ScenarioError(f"buffer_capacity must be >= 1{where}")
        if self.device_type not in DEVICE_TYPES:
            raise ScenarioError(f"unknown device_type {self.device_type!r}{where}")
        if not (math.isfinite(self.x_position) and math.isfinite(self.y_position)):
            raise ScenarioError(f"non-finite position{where}")

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x_position, self.y_position)


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    node_count: int
    # 200 m square: 40-120 nodes at a 50 m radius stay mostly connected.
    area_width: float = 200.0
    area_height: float = 200.0
    device_type_mix: Tuple[float, float, float] = (0.5, 0.3, 0.2)  # phone, sensor, relay
    buffer_capacity_range: Tuple[int, int] = (4, 20)

    def validate(self) -> None:
        if self.node_count < 2:
            raise ScenarioError(f"node_count must be >= 2, got {self.node_count}")
        if not (self.area_width > 0 and self.area_height > 0):
            raise ScenarioError("area dimensions must be positive")
        mix = self.device_type_mix
        if len(mix) != 3 or any(p < 0 for p in mix) or abs(sum(mix) - 1.0) > 1e-9:
            raise ScenarioError(f"device_type_mix must be 3 fractions summing to 1, got {mix}")
        lo, hi = self.buffer_capacity_range
        if lo < 1 or hi < lo:
            raise ScenarioError(f"bad buffer_capacity_range {self.buffer_capacity_range}")


@dataclass
class Scenario:
    scenario_id: int
    devices: List[DeviceSpec]
    config: ScenarioConfig | None = None

    def __post_init__(self) -> None:
        self.devices = sorted(self.devices, key=lambda d: d.device_id)

    def validate(self) -> None:
        if not self.devices:
            raise ScenarioError("scenario has no devices")
        ids = [d.device_id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate device_id")
        for i, d in enumerate(self.devices, start=1):
            d.validate(row=i)
        if self.config is not None and len(self.devices) != self.config.node_count:
            raise ScenarioError("device count does not match config.node_count")

    def device(self, device_id: int) -> DeviceSpec:
        for d in self.devices:
            if d.device_id == device_id:
                return d
        raise KeyError(f"unknown device {device_id}")

    @property
    def ids(self) -> List[int]:
        return [d.device_id for d in self.devices]


def _round(values: np.ndarray) -> List[float]:
    return [round(float(v), DECIMALS) for v in values]


def generate_scenario(config: ScenarioConfig, scenario_id: int = 1) -> Scenario:
    """Draw a scenario from ``config``; identical configs give identical scenarios."""
    config.validate()
    n = config.node_count
    rng = np.random.default_rng(config.seed)
    xs = _round(rng.uniform(0.0, config.area_width, n))
    ys = _round(rng.uniform(0.0, config.area_height, n))
    battery = _round(rng.random(n))
    signal = _round(rng.random(n))
    success = _round(rng.random(n))
    u_type = rng.random(n)
    priority = _round(rng.random(n))
    lo, hi = config.buffer_capacity_range
    buffers = rng.integers(lo, hi + 1, n)
    uptime = _round(rng.random(n))

    cut_phone = config.device_type_mix[0]
    cut_sensor = cut_phone + config.device_type_mix[1]
    devices = []
    for i in range(n):
        if u_type[i] < cut_phone:
            dtype = "phone"
        elif u_type[i] < cut_sensor:
            dtype = "sensor"
        else:
            dtype = "relay"
        devices.append(
            DeviceSpec(
                device_id=i + 1,
                x_position=min(xs[i], config.area_width),
                y_position=min(ys[i], config.area_height),
                battery_level=battery[i],
                signal_quality=signal[i],
                success_rate=success[i],
                device_type=dtype,
                priority_tolerance=priority[i],
                buffer_capacity=int(buffers[i]),
                uptime_ratio=uptime[i],
            )
        )
    return Scenario(scenario_id=scenario_id, devices=devices, config=config)


def default_suite(base_seed: int = 2025, count: int = 10,
                  node_counts: Sequence[int] | None = None,
                  area: Tuple[float, float] = (200.0, 200.0)) -> List[ScenarioConfig]:
    """The default scenario suite: ``count`` configs with node counts spread evenly."""
    if node_counts is None:
        node_counts = [int(round(v)) for v in np.linspace(40, 120, count)]
    return [
        ScenarioConfig(seed=base_seed + i, node_count=int(n),
                       area_width=area[0], area_height=area[1])
        for i, n in enumerate(node_counts)
    ]


def _format_row(d: DeviceSpec) -> List[str]:
    return [
        str(d.device_id),
        f"{d.x_position:.{DECIMALS}f}",
        f"{d.y_position:.{DECIMALS}f}",
        f"{d.battery_level:.{DECIMALS}f}",
        f"{d.signal_quality:.{DECIMALS}f}",
        f"{d.success_rate:.{DECIMALS}f}",
        d.device_type,
        f"{d.priority_tolerance:.{DECIMALS}f}",
        str(d.buffer_capacity),
        f"{d.uptime_ratio:.{DECIMALS}f}",
    ]


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def scenario_to_csv(s: Scenario) -> str:
    s.validate()
    lines = [",".join(COLUMNS)]
    lines.extend(",".join(_format_row(d)) for d in s.devices)
    return "\n".join(lines) + "\n"


def save_scenario(s: Scenario, path: str | os.PathLike) -> None:
    atomic_write_text(path, scenario_to_csv(s))


def scenario_filename(index: int) -> str:
    return f"devices_scenario_{index}.csv"


def save_suite(scenarios: Iterable[Scenario], out_dir: str | os.PathLike) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for s in scenarios:
        p = out / scenario_filename(s.scenario_id)
        save_scenario(s, p)
        paths.append(p)
    return paths


def load_scenario(path: str | os.PathLike, scenario_id: int | None = None) -> Scenario:
    path = Path(path)
    if scenario_id is None:
        scenario_id = _id_from_name(path.name)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for col in COLUMNS:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        if tuple(header) != COLUMNS:
            raise SchemaError(f"{path}: header must be exactly {','.join(COLUMNS)}")
        devices = []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(COLUMNS):
                raise ScenarioError(f"{path}: row {row_no} has {len(row)} fields")
            try:
                d = DeviceSpec(
                    device_id=int(row[0]),
                    x_position=float(row[1]),
                    y_position=float(row[2]),
                    battery_level=float(row[3]),
                    signal_quality=float(row[4]),
                    success_rate=float(row[5]),
                    device_type=row[6].strip(),
                    priority_tolerance=float(row[7]),
                    buffer_capacity=int(row[8]),
                    uptime_ratio=float(row[9]),
                )
            except ValueError as exc:
                raise ScenarioError(f"{path}: row {row_no}: {exc}") from None
            d.validate(row=row_no)
            devices.append(d)
    if not devices:
        raise ScenarioError(f"{path}: scenario has no devices")
    s = Scenario(scenario_id=scenario_id, devices=devices)
    s.validate()
    return s


def load_suite(scenario_dir: str | os.PathLike) -> List[Scenario]:
    """Load every ``devices_scenario_*.csv`` in a directory, ordered by index."""
    paths = sorted(Path(scenario_dir).glob("devices_scenario_*.csv"),
                   key=lambda p: _id_from_name(p.name))
    return [load_scenario(p) for p in paths]


def _id_from_name(name: str) -> int:
    stem = name.rsplit(".", 1)[0]
    tail = stem.rsplit("_", 1)[-1]
    return int(tail) if tail.isdigit() else 1
