"""Simplified AODV: TTL-bounded BFS discovery, routing tables, failure logging, fallback."""

from __future__ import annotations

import math
from collections import deque
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

Adjacency = Mapping[int, Sequence[int]]


def bfs_route(sender: int, receiver: int, adjacency: Adjacency, ttl: int) -> Optional[List[int]]:
    """Minimum-hop path from sender to receiver using at most ``ttl`` hops.

    Neighbour lists are expanded in ascending id order, so among equal-length
    paths the first one discovered is always returned.
    """
    if sender == receiver:
        raise ValueError("sender and receiver must differ")
    if ttl < 1:
        return None
    parent: Dict[int, int] = {sender: sender}
    frontier = deque([(sender, 0)])
    while frontier:
        node, depth = frontier.popleft()
        if depth >= ttl:
            continue
        for nb in sorted(adjacency.get(node, ())):
            if nb in parent:
                continue
            parent[nb] = node
            if nb == receiver:
                path = [nb]
                while path[-1] != sender:
                    path.append(parent[path[-1]])
                return path[::-1]
            frontier.append((nb, depth + 1))
    return None


def update_routing_tables(path: Sequence[int], node_states: Mapping[int, object]) -> None:
    """Point every node on ``path`` at its successor for all downstream destinations."""
    for i in range(len(path) - 1):
        table = node_states[path[i]].routing_table
        for dest in path[i + 1:]:
            table[dest] = path[i + 1]


def nearest_neighbors(node: int, neighbors: Sequence[int],
                      positions: Mapping[int, Tuple[float, float]], count: int = 2) -> List[int]:
    px, py = positions[node]
    ranked = sorted(neighbors, key=lambda n: (math.hypot(positions[n][0] - px,
                                                         positions[n][1] - py), n))
    return ranked[:count]


def log_partial_failure(sender: int, receiver: int, scenario_state, message,
                        mode: str = "baseline"):
    """Failed-attempt records for a message with no TTL-feasible route.

    One ``dropped_ttl`` record per nearest neighbour (at most two), or a single
    ``no_route`` record if the sender is isolated. Attempts take no time.
    """
    from .records import HopLogRecord

    neighbors = list(scenario_state.adjacency.get(sender, ()))
    base = dict(
        scenario_id=scenario_state.scenario_id,
        message_id=message.message_id,
        mode=mode,
        from_id=sender,
        ttl_initial=message.ttl_initial,
        hop_delay_s=0.0,
        final_delivered=False,
        total_delay_s=0.0,
        total_hops=0,
    )
    if not neighbors:
        return [HopLogRecord(hop_index=0, to_id=None, ttl_left_at_hop=message.ttl_initial,
                             buffer_ratio_at_to=0.0, distance_to_target_m=0.0,
                             candidate_ids=[], chosen_id=None, hop_outcome="no_route",
                             **base)]
    feats = scenario_state.candidate_features(sender, neighbors, message, message.created_at)
    recv_pos = scenario_state.positions[receiver]
    records = []
    for i, nb in enumerate(nearest_neighbors(sender, neighbors, scenario_state.positions)):
        pos = scenario_state.positions[nb]
        records.append(HopLogRecord(
            hop_index=i,
            to_id=nb,
            ttl_left_at_hop=message.ttl_initial - 1,
            buffer_ratio_at_to=round(scenario_state.nodes[nb].buffer_ratio(), 6),
            distance_to_target_m=round(math.hypot(recv_pos[0] - pos[0], recv_pos[1] - pos[1]), 6),
            candidate_ids=list(neighbors),
            chosen_id=nb,
            candidate_features=feats,
            hop_outcome="dropped_ttl",
            **base,
        ))
    return records


def fallback_aodv_selection(current: int, receiver: int, candidates: Sequence[int],
                            adjacency: Adjacency, ttl_left: int,
                            positions: Mapping[int, Tuple[float, float]]) -> Optional[int]:
    """Next hop when fused scoring declines to choose.

    Prefer the second node of a TTL-feasible BFS route if it is a candidate;
    otherwise the candidate closest to the receiver (lower id on ties).
    """
    if not candidates:
        return None
    cset = set(candidates)
    if current != receiver:
        path = bfs_route(current, receiver, adjacency, ttl_left)
        if path is not None and path[1] in cset:
            return path[1]
    rx, ry = positions[receiver]
    return min(candidates, key=lambda c: (math.hypot(positions[c][0] - rx,
                                                     positions[c][1] - ry), c))
