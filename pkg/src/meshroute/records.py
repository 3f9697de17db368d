"""Message, hop-log and delivery-outcome types plus the hop-log CSV format."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .features import N_FEATURES

MODES = ("baseline", "abc", "abcd")
HOP_OUTCOMES = ("forwarded", "dropped_buffer", "dropped_ttl", "no_route")
FAILURE_REASONS = ("none", "no_route", "ttl_expired", "buffer_drop")

LOG_COLUMNS = (
    "scenario_id",
    "message_id",
    "mode",
    "hop_index",
    "from_id",
    "to_id",
    "ttl_initial",
    "ttl_left_at_hop",
    "buffer_ratio_at_to",
    "distance_to_target_m",
    "hop_delay_s",
    "candidate_ids",
    "chosen_id",
    "candidate_features",
    "score_breakdown",
    "hop_outcome",
    "final_delivered",
    "total_delay_s",
    "total_hops",
)


class LogError(ValueError):
    pass


@dataclass
class Message:
    message_id: int
    sender_id: int
    receiver_id: int
    ttl_initial: int
    hop_count: int = 0
    created_at: float = 0.0

    def __post_init__(self) -> None:
        if self.sender_id == self.receiver_id:
            raise ValueError("sender and receiver must differ")
        if self.ttl_initial < 1:
            raise ValueError("ttl_initial must be >= 1")


@dataclass
class HopLogRecord:
    scenario_id: int
    message_id: int
    mode: str
    hop_index: int
    from_id: int
    to_id: Optional[int]
    ttl_initial: int
    ttl_left_at_hop: int
    buffer_ratio_at_to: float
    distance_to_target_m: float
    hop_delay_s: float
    candidate_ids: List[int]
    chosen_id: Optional[int]
    # One 8-feature tuple per entry of candidate_ids, in the same order.
    candidate_features: List[Tuple[float, ...]] = field(default_factory=list)
    score_breakdown: str = ""
    hop_outcome: str = "forwarded"
    final_delivered: bool = False
    total_delay_s: float = 0.0
    total_hops: int = 0

    def features_of(self, candidate_id: int) -> Tuple[float, ...]:
        return self.candidate_features[self.candidate_ids.index(candidate_id)]


@dataclass
class DeliveryOutcome:
    delivered: bool
    path: List[int]
    total_delay_s: float
    ttl_left_final: int
    failure_reason: str = "none"

    @property
    def hops(self) -> int:
        return len(self.path) - 1


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _opt(v: Optional[int]) -> str:
    return "" if v is None else str(v)


def _fmt_features(rows: Sequence[Tuple[float, ...]]) -> str:
    return "|".join(":".join(_fmt(v) for v in row) for row in rows)


def _parse_features(text: str) -> List[Tuple[float, ...]]:
    if not text:
        return []
    out = []
    for chunk in text.split("|"):
        vals = tuple(float(v) for v in chunk.split(":"))
        if len(vals) != N_FEATURES:
            raise LogError(f"candidate feature vector has {len(vals)} values")
        out.append(vals)
    return out


def record_to_row(r: HopLogRecord) -> List[str]:
    return [
        str(r.scenario_id),
        str(r.message_id),
        r.mode,
        str(r.hop_index),
        str(r.from_id),
        _opt(r.to_id),
        str(r.ttl_initial),
        str(r.ttl_left_at_hop),
        _fmt(r.buffer_ratio_at_to),
        _fmt(r.distance_to_target_m),
        _fmt(r.hop_delay_s),
        "|".join(str(c) for c in r.candidate_ids),
        _opt(r.chosen_id),
        _fmt_features(r.candidate_features),
        r.score_breakdown,
        r.hop_outcome,
        "1" if r.final_delivered else "0",
        _fmt(r.total_delay_s),
        str(r.total_hops),
    ]


def row_to_record(row: Sequence[str]) -> HopLogRecord:
    if len(row) != len(LOG_COLUMNS):
        raise LogError(f"expected {len(LOG_COLUMNS)} fields, got {len(row)}")
    outcome = row[15]
    if outcome not in HOP_OUTCOMES:
        raise LogError(f"unknown hop_outcome {outcome!r}")
    return HopLogRecord(
        scenario_id=int(row[0]),
        message_id=int(row[1]),
        mode=row[2],
        hop_index=int(row[3]),
        from_id=int(row[4]),
        to_id=int(row[5]) if row[5] else None,
        ttl_initial=int(row[6]),
        ttl_left_at_hop=int(row[7]),
        buffer_ratio_at_to=float(row[8]),
        distance_to_target_m=float(row[9]),
        hop_delay_s=float(row[10]),
        candidate_ids=[int(c) for c in row[11].split("|")] if row[11] else [],
        chosen_id=int(row[12]) if row[12] else None,
        candidate_features=_parse_features(row[13]),
        score_breakdown=row[14],
        hop_outcome=outcome,
        final_delivered=row[16] == "1",
        total_delay_s=float(row[17]),
        total_hops=int(row[18]),
    )


def logs_to_csv(records: Iterable[HopLogRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for r in records:
        w.writerow(record_to_row(r))
    return buf.getvalue()


def write_log(records: Iterable[HopLogRecord], path: str | os.PathLike) -> None:
    from .scenario import atomic_write_text

    atomic_write_text(path, logs_to_csv(records))


def read_log(path: str | os.PathLike) -> List[HopLogRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != LOG_COLUMNS:
            raise LogError(f"{path}: unexpected hop-log header")
        return [row_to_record(row) for row in reader if row]


def group_by_message(records: Iterable[HopLogRecord]):
    """Map (scenario_id, message_id) to that message's records in hop order."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.scenario_id, r.message_id), []).append(r)
    for recs in groups.values():
        recs.sort(key=lambda r: r.hop_index)
    return groups
