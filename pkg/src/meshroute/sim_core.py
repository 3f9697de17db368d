"""Message delivery over a stationary mesh: node state, buffers, delay and the forwarding loop.

Messages are processed one at a time in id order, each with its own
creation time and clock. Buffer slots live on a per-node timeline: a relay
that accepts a message holds one slot from the start of the hop into it
until ``buffer_retention_s`` after arrival. The default retention is
infinite, so relays keep custody for the whole run. The final receiver
consumes the message and needs no slot. A reservation succeeds only if a slot is free over its whole
interval, so occupancy never exceeds capacity at any simulated instant.

With the default ``message_interval_s`` consecutive messages never overlap
in time, so the buffer ratio a node shows at decision time is exactly what
decides acceptance.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import aodv
from .features import (FeatureVector, buffer_ratio, distance_to_target, encode_device_type,
                       extract_features)
from .records import DeliveryOutcome, HopLogRecord, Message, MODES
from .scenario import DeviceSpec, Scenario

PRIOR_PSEUDO_ATTEMPTS = 10
UPTIME_PRIOR_WEIGHT = 0.9


class SimulationError(RuntimeError):
    pass


class ConfigurationError(SimulationError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    radius_m: float = 50.0
    ttl_initial: int = 10
    messages_per_scenario: int = 100
    base_hop_delay_s: float = 10.0
    queue_penalty_s: float = 20.0
    capability_weights: Tuple[float, float, float] = (0.4, 0.4, 0.2)
    workload_seed: int = 7
    message_interval_s: float = 1000.0
    buffer_retention_s: float = math.inf

    def validate(self) -> None:
        if self.radius_m <= 0:
            raise ConfigurationError("radius_m must be positive")
        if self.ttl_initial < 1:
            raise ConfigurationError("ttl_initial must be >= 1")
        if self.messages_per_scenario < 0:
            raise ConfigurationError("messages_per_scenario must be >= 0")
        w = self.capability_weights
        if len(w) != 3 or any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigurationError("capability_weights must be 3 fractions summing to 1")
        if self.base_hop_delay_s <= 0 or self.queue_penalty_s < 0:
            raise ConfigurationError("delay constants must be positive")
        if self.message_interval_s < 0 or self.buffer_retention_s < 0:
            raise ConfigurationError("message_interval_s and buffer_retention_s must be >= 0")


@dataclass
class NodeState:
    spec: DeviceSpec
    buffer_used: int = 0
    deliveries_attempted: float = 0.0
    deliveries_succeeded: float = 0.0
    active_time: float = 0.0
    total_time: float = 0.0
    routing_table: Dict[int, int] = field(default_factory=dict)
    # Buffer reservations as parallel sorted lists of interval starts/ends.
    _starts: List[float] = field(default_factory=list, repr=False)
    _ends: List[float] = field(default_factory=list, repr=False)

    @classmethod
    def from_spec(cls, spec: DeviceSpec) -> "NodeState":
        # The scenario's success_rate prior counts as PRIOR_PSEUDO_ATTEMPTS attempts.
        return cls(spec=spec,
                   deliveries_attempted=float(PRIOR_PSEUDO_ATTEMPTS),
                   deliveries_succeeded=PRIOR_PSEUDO_ATTEMPTS * spec.success_rate)

    def success_rate(self) -> float:
        if self.deliveries_attempted <= 0:
            return self.spec.success_rate
        return self.deliveries_succeeded / self.deliveries_attempted

    def buffer_ratio(self) -> float:
        return buffer_ratio(self.buffer_used, self.spec.buffer_capacity)

    def occupancy(self, t: float) -> int:
        """Slots held at instant ``t`` (intervals are half-open ``[start, end)``)."""
        return bisect.bisect_right(self._starts, t) - bisect.bisect_right(self._ends, t)

    def max_occupancy(self, t0: float, t1: float) -> int:
        peak = self.occupancy(t0)
        lo = bisect.bisect_right(self._starts, t0)
        hi = bisect.bisect_left(self._starts, t1)
        for s in self._starts[lo:hi]:
            peak = max(peak, self.occupancy(s))
        return peak

    def sync(self, t: float) -> None:
        self.buffer_used = self.occupancy(t)

    def reserve(self, t0: float, t1: float) -> bool:
        """Take one slot over ``[t0, t1)`` if one is free throughout."""
        self.buffer_used = self.max_occupancy(t0, t1)
        accepted = try_enqueue(self)
        if accepted:
            bisect.insort(self._starts, t0)
            bisect.insort(self._ends, t1)
        self.sync(t0)
        return accepted

    def full_time(self, now: float) -> float:
        """Seconds in ``[0, now)`` spent with every slot taken."""
        cap = self.spec.buffer_capacity
        events = sorted([(s, 1) for s in self._starts if s < now]
                        + [(e, -1) for e in self._ends if e < now])
        level, last, full = 0, 0.0, 0.0
        for t, step in events:
            if level >= cap:
                full += t - last
            level += step
            last = t
        if level >= cap:
            full += now - last
        return full

    def uptime(self, now: float | None = None) -> float:
        """Prior blended with the measured active fraction of ``[0, now)``."""
        prior = self.spec.uptime_ratio
        if now is None or now <= 0:
            return prior
        self.total_time = now
        self.active_time = now - self.full_time(now)
        measured = self.active_time / self.total_time
        return UPTIME_PRIOR_WEIGHT * prior + (1 - UPTIME_PRIOR_WEIGHT) * measured


def try_enqueue(to_state: NodeState) -> bool:
    if to_state.buffer_used < to_state.spec.buffer_capacity:
        to_state.buffer_used += 1
        return True
    return False


def discover_neighbors(node_id: int, scenario: Scenario, radius_m: float) -> List[int]:
    """Ids within ``radius_m`` of ``node_id`` (inclusive), ascending."""
    me = scenario.device(node_id)
    out = []
    for d in scenario.devices:
        if d.device_id == node_id:
            continue
        if math.hypot(d.x_position - me.x_position, d.y_position - me.y_position) <= radius_m:
            out.append(d.device_id)
    return out


def build_adjacency(scenario: Scenario, radius_m: float) -> Dict[int, List[int]]:
    ids = np.array([d.device_id for d in scenario.devices])
    xy = np.array([[d.x_position, d.y_position] for d in scenario.devices])
    diff = xy[:, None, :] - xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    within = dist <= radius_m
    np.fill_diagonal(within, False)
    return {int(ids[i]): [int(j) for j in ids[within[i]]] for i in range(len(ids))}


def capability_score(state: NodeState,
                     weights: Tuple[float, float, float] = (0.4, 0.4, 0.2)) -> float:
    s = state.spec
    return weights[0] * s.battery_level + weights[1] * s.signal_quality + weights[2] * state.success_rate()


def hop_delay(from_state: NodeState, to_state: NodeState, distance_m: float,
              config: SimulationConfig) -> float:
    cap = capability_score(to_state, config.capability_weights)
    return (config.base_hop_delay_s * (1.0 + distance_m / config.radius_m) * (2.0 - cap)
            + config.queue_penalty_s * to_state.buffer_ratio())


class ScenarioState:
    """Mutable per-run state of one scenario: node states and topology."""

    def __init__(self, scenario: Scenario, config: SimulationConfig):
        config.validate()
        self.scenario = scenario
        self.scenario_id = scenario.scenario_id
        self.config = config
        self.positions = {d.device_id: d.position for d in scenario.devices}
        self.specs = {d.device_id: d for d in scenario.devices}
        self.adjacency = build_adjacency(scenario, config.radius_m)
        self.nodes = {d.device_id: NodeState.from_spec(d) for d in scenario.devices}

    def eligible(self, current: int, receiver: int, visited, now: float) -> List[int]:
        """Unvisited neighbours of ``current`` that can take the message at ``now``.

        The receiver always qualifies since delivery needs no relay slot.
        """
        out = []
        for n in self.adjacency[current]:
            if n in visited:
                continue
            st = self.nodes[n]
            st.sync(now)
            if n == receiver or st.buffer_used < st.spec.buffer_capacity:
                out.append(n)
        return out

    def candidate_features(self, origin: int, candidates: Sequence[int], message: Message,
                           now: float) -> List[Tuple[float, ...]]:
        """Rounded feature tuples for each candidate (the exact values that get logged)."""
        origin_state = self.nodes[origin]
        receiver = self.specs[message.receiver_id]
        rows = []
        for c in candidates:
            st = self.nodes[c]
            st.sync(now)
            fv = extract_features(origin_state, st, message, receiver, now)
            rows.append(tuple(round(float(v), 6) for v in fv.as_array()))
        return rows


def _check_bundle(strategy: str, bundle) -> None:
    if strategy not in MODES:
        raise ConfigurationError(f"unknown strategy {strategy!r}")
    if strategy != "baseline" and bundle is None:
        raise ConfigurationError(f"strategy {strategy!r} needs a trained model bundle")


def run_delivery(message: Message, state: ScenarioState, strategy: str, bundle=None,
                 fusion_params=None) -> Tuple[DeliveryOutcome, List[HopLogRecord]]:
    """Forward one message hop by hop until delivery or failure."""
    _check_bundle(strategy, bundle)
    from . import fusion

    if fusion_params is None:
        fusion_params = fusion.FusionParams.for_mode(strategy)
    cfg = state.config
    sender, receiver = message.sender_id, message.receiver_id
    message.hop_count = 0

    plan = None
    if strategy == "baseline":
        plan = aodv.bfs_route(sender, receiver, state.adjacency, message.ttl_initial)
        if plan is None:
            records = aodv.log_partial_failure(sender, receiver, state, message, strategy)
            _finish_counters(state, [sender], delivered=False)
            outcome = DeliveryOutcome(False, [sender], 0.0, message.ttl_initial, "no_route")
            return outcome, records
        aodv.update_routing_tables(plan, state.nodes)

    t = message.created_at
    path = [sender]
    visited = {sender}
    records: List[HopLogRecord] = []
    forwarders: List[int] = []
    reason = "none"
    recv_pos = state.positions[receiver]

    def record(**kw) -> HopLogRecord:
        r = HopLogRecord(scenario_id=state.scenario_id, message_id=message.message_id,
                         mode=strategy, hop_index=len(records), ttl_initial=message.ttl_initial,
                         **kw)
        records.append(r)
        return r

    current = sender
    while current != receiver:
        left = message.ttl_initial - message.hop_count
        if left <= 0:
            reason = "ttl_expired"
            record(from_id=current, to_id=None, ttl_left_at_hop=0, buffer_ratio_at_to=0.0,
                   distance_to_target_m=0.0, hop_delay_s=0.0, candidate_ids=[],
                   chosen_id=None, hop_outcome="dropped_ttl")
            break
        candidates = state.eligible(current, receiver, visited, t)
        feats = state.candidate_features(current, candidates, message, t)
        breakdown = ""
        if plan is not None:
            chosen = plan[message.hop_count + 1]
        else:
            decision = fusion.select_forwarder(candidates, feats, bundle, fusion_params)
            breakdown = decision.serialize()
            chosen = decision.chosen
            if chosen is None:
                chosen = aodv.fallback_aodv_selection(current, receiver, candidates, state.adjacency,
                                                      left, state.positions)
        forwarders.append(current)
        if chosen is None:
            reason = "no_route"
            record(from_id=current, to_id=None, ttl_left_at_hop=left, buffer_ratio_at_to=0.0,
                   distance_to_target_m=0.0, hop_delay_s=0.0, candidate_ids=candidates,
                   chosen_id=None, candidate_features=feats, score_breakdown=breakdown,
                   hop_outcome="no_route")
            break
        to_state = state.nodes[chosen]
        to_state.sync(t)
        ratio = to_state.buffer_ratio()
        pos = state.positions[chosen]
        dist = math.hypot(pos[0] - state.positions[current][0], pos[1] - state.positions[current][1])
        delay = round(hop_delay(state.nodes[current], to_state, dist, cfg), 6)
        to_target = round(distance_to_target(pos, recv_pos), 6)
        accepted = chosen == receiver or to_state.reserve(t, t + delay + cfg.buffer_retention_s)
        if not accepted:
            reason = "buffer_drop"
            record(from_id=current, to_id=chosen, ttl_left_at_hop=left,
                   buffer_ratio_at_to=round(ratio, 6), distance_to_target_m=to_target,
                   hop_delay_s=0.0, candidate_ids=candidates, chosen_id=chosen,
                   candidate_features=feats, score_breakdown=breakdown,
                   hop_outcome="dropped_buffer")
            break
        message.hop_count += 1
        t += delay
        record(from_id=current, to_id=chosen, ttl_left_at_hop=left - 1,
               buffer_ratio_at_to=round(ratio, 6), distance_to_target_m=to_target,
               hop_delay_s=delay, candidate_ids=candidates, chosen_id=chosen,
               candidate_features=feats, score_breakdown=breakdown, hop_outcome="forwarded")
        path.append(chosen)
        visited.add(chosen)
        current = chosen

    delivered = current == receiver
    hops = message.hop_count
    total_delay = round(sum(r.hop_delay_s for r in records), 6)
    for r in records:
        r.final_delivered = delivered
        r.total_delay_s = total_delay
        r.total_hops = hops
    _finish_counters(state, forwarders, delivered)
    outcome = DeliveryOutcome(delivered, path, total_delay, message.ttl_initial - hops,
                              "none" if delivered else reason)
    return outcome, records


def _finish_counters(state: ScenarioState, forwarders: Sequence[int], delivered: bool) -> None:
    for nid in dict.fromkeys(forwarders):
        st = state.nodes[nid]
        st.deliveries_attempted += 1
        if delivered:
            st.deliveries_succeeded += 1


def make_workload(scenario: Scenario, config: SimulationConfig) -> List[Message]:
    """Seeded uniform sender/receiver pairs (sender != receiver), evenly spaced in time."""
    ids = scenario.ids
    n = len(ids)
    rng = np.random.default_rng([config.workload_seed, scenario.scenario_id])
    msgs = []
    for k in range(config.messages_per_scenario):
        s = int(rng.integers(n))
        r = int(rng.integers(n - 1))
        if r >= s:
            r += 1
        msgs.append(Message(message_id=k + 1, sender_id=ids[s], receiver_id=ids[r],
                            ttl_initial=config.ttl_initial,
                            created_at=k * config.message_interval_s))
    return msgs


def run_scenario(scenario: Scenario, sim_config: SimulationConfig, strategy: str,
                 bundle=None, fusion_params=None,
                 outcomes: Optional[list] = None) -> List[HopLogRecord]:
    """Run the seeded workload for one scenario; returns all hop records in message order."""
    _check_bundle(strategy, bundle)
    state = ScenarioState(scenario, sim_config)
    logs: List[HopLogRecord] = []
    for msg in make_workload(scenario, sim_config):
        outcome, recs = run_delivery(msg, state, strategy, bundle, fusion_params)
        logs.extend(recs)
        if outcomes is not None:
            outcomes.append(outcome)
    return logs


def run_suite(scenarios: Sequence[Scenario], sim_config: SimulationConfig, strategy: str,
              bundle=None, fusion_params=None) -> List[HopLogRecord]:
    logs: List[HopLogRecord] = []
    for s in scenarios:
        logs.extend(run_scenario(s, sim_config, strategy, bundle, fusion_params))
    return logs
