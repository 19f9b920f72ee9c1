"""Benchmark scenario generation: stress regimes, graph families, attacks.

All generation is deterministic per (kind, master seed, scenario index);
every scenario carries its master seed and the train/eval split it implies
(train seeds 0-4, eval seeds 5-9).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .graph import FailureEvent, GraphSnapshot, Route

REGIMES = ("clean", "noise", "churn", "mixed", "non_tree")
FAMILIES = ("BA", "WS", "ER")
PROTOCOLS = ("severity_load", "load_matched", "random")
# Appendix-style attack profiles: the three protocols plus scaled severities.
PROFILES = (
    ("severity_load", 1.0),
    ("load_matched", 1.0),
    ("random", 1.0),
    ("severity_load", 0.5),
    ("severity_load", 1.5),
)
ATTACK_SEVERITIES = (0.85, 0.73, 0.61)
SNAPSHOT_TIME = 100.0
TRAIN_SEEDS = (0, 1, 2, 3, 4)
EVAL_SEEDS = (5, 6, 7, 8, 9)
TARGET_ROUTES = 9


class DegenerateScenarioError(ValueError):
    """Raised when a scenario lacks the two routes needed for pairing."""


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    snapshot: GraphSnapshot
    candidate_routes: tuple[Route, ...]
    attacked_index: int
    safe_index: int
    injected_events: tuple[FailureEvent, ...] = ()
    background_events: tuple[FailureEvent, ...] = ()
    regime: str | None = None
    family: str | None = None
    protocol: str | None = None
    seed: int = 0
    split: str = "eval"

    def __post_init__(self):
        if self.attacked_index == self.safe_index:
            raise ValueError("attacked and safe route must differ")
        attacked_nodes = set(self.candidate_routes[self.attacked_index].node_sequence)
        for e in self.injected_events:
            if e.node not in attacked_nodes:
                raise ValueError("injected events must target attacked-route nodes")

    @property
    def attacked_route(self) -> Route:
        return self.candidate_routes[self.attacked_index]

    @property
    def safe_route(self) -> Route:
        return self.candidate_routes[self.safe_index]

    def all_events(self) -> tuple[FailureEvent, ...]:
        return self.background_events + self.injected_events

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "regime": self.regime,
            "family": self.family,
            "protocol": self.protocol,
            "seed": self.seed,
            "split": self.split,
            "snapshot": self.snapshot.to_dict(),
            "routes": [list(r.node_sequence) for r in self.candidate_routes],
            "attacked_index": self.attacked_index,
            "safe_index": self.safe_index,
            "injected_events": [e.to_dict() for e in self.injected_events],
            "background_events": [e.to_dict() for e in self.background_events],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(
            scenario_id=data["scenario_id"],
            snapshot=GraphSnapshot.from_dict(data["snapshot"]),
            candidate_routes=tuple(Route(tuple(seq)) for seq in data["routes"]),
            attacked_index=int(data["attacked_index"]),
            safe_index=int(data["safe_index"]),
            injected_events=tuple(
                FailureEvent.from_dict(e) for e in data["injected_events"]
            ),
            background_events=tuple(
                FailureEvent.from_dict(e) for e in data["background_events"]
            ),
            regime=data.get("regime"),
            family=data.get("family"),
            protocol=data.get("protocol"),
            seed=int(data.get("seed", 0)),
            split=data.get("split", "eval"),
        )


def scenario_to_jsonl(scenarios: Sequence[Scenario]) -> str:
    return "\n".join(
        json.dumps(s.to_dict(), sort_keys=True, separators=(",", ":")) for s in scenarios
    )


def scenarios_from_jsonl(text: str) -> list[Scenario]:
    return [Scenario.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def split_for_seed(seed: int) -> str:
    return "train" if seed in TRAIN_SEEDS else "eval"


def _rng_for(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def _random_tree(rng, n: int) -> list[tuple[int, int]]:
    # Parent chosen among recent nodes to keep branching around 2-3.
    edges = []
    children = {0: 0}
    for v in range(1, n):
        candidates = [u for u in range(v) if children[u] < 3]
        weights = np.array([1.0 if children[u] < 2 else 0.3 for u in candidates])
        parent = int(rng.choice(candidates, p=weights / weights.sum()))
        children[parent] += 1
        children[v] = 0
        edges.append((parent, v))
    return edges


def _synth_values(rng, nodes, edges) -> dict:
    return {
        "edge_reliability": {e: float(rng.uniform(0.7, 1.0)) for e in edges},
        "node_load": {v: float(rng.uniform(0.0, 0.6)) for v in nodes},
        "node_fitness": {v: float(rng.uniform(0.5, 1.0)) for v in nodes},
    }


def _enumerate_routes(rng, snapshot_edges, nodes, target=TARGET_ROUTES, max_len=12, min_len=4):
    """Seeded random-walk simple paths along directed edges, deduplicated.

    Walks shorter than ``min_len`` are kept only to fill up when the graph
    cannot supply ``target`` longer ones.
    """
    adj = {v: [] for v in nodes}
    for u, v in snapshot_edges:
        adj[u].append(v)
    for v in adj:
        adj[v].sort()
    starts = [v for v in nodes if adj[v]]
    routes: list[tuple[int, ...]] = []
    short: list[tuple[int, ...]] = []
    seen = set()
    if not starts:
        return routes
    for _ in range(60 * target):
        walk = [int(rng.choice(starts))]
        visited = {walk[0]}
        while len(walk) < max_len:
            nxt = [u for u in adj[walk[-1]] if u not in visited]
            if not nxt:
                break
            step = int(rng.choice(nxt))
            walk.append(step)
            visited.add(step)
        key = tuple(walk)
        if len(walk) < 2 or key in seen:
            continue
        seen.add(key)
        (routes if len(walk) >= min_len else short).append(key)
        if len(routes) >= target:
            break
    routes.extend(short[: target - len(routes)])
    return routes[:target]


def enumerate_route_pairs(n_routes: int) -> list[tuple[int, int]]:
    """Even/odd pairing over the route enumeration; a trailing odd route drops."""
    return [(i, i + 1) for i in range(0, n_routes - 1, 2)]


def pair_routes(s: Scenario) -> tuple[Route, Route]:
    """The scenario's designated (attacked, safe) pair."""
    if len(s.candidate_routes) < 2:
        raise DegenerateScenarioError(s.scenario_id)
    return s.attacked_route, s.safe_route


def inject_attack(
    s: Scenario,
    protocol: str = "severity_load",
    seed: int = 0,
    severity_scale: float = 1.0,
) -> Scenario:
    """Return the scenario with attack events injected on the attacked route.

    severity_load hits the route's last three nodes; load_matched its three
    highest-load nodes; random three seeded uniform picks. Severities are
    (0.85, 0.73, 0.61) scaled and clamped to [0, 1]; timestamps fall in the
    two seconds before the scoring time. Routes shorter than three nodes use
    the severity prefix.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown attack protocol {protocol!r}")
    route = s.attacked_route
    seq = route.node_sequence
    k = min(3, len(seq))
    if protocol == "severity_load":
        targets = list(seq[-k:])
    elif protocol == "load_matched":
        by_load = sorted(seq, key=lambda v: (-s.snapshot.node_load[v], v))
        targets = by_load[:k]
    else:
        rng = _rng_for(seed, 0xA77AC)
        targets = [int(v) for v in rng.choice(seq, size=k, replace=False)]
    rng_t = _rng_for(seed, 0x71135)
    t = s.snapshot.timestamp
    events = tuple(
        FailureEvent(
            time=float(rng_t.uniform(t - 2.0, t)),
            node=v,
            severity=min(1.0, ATTACK_SEVERITIES[i] * severity_scale),
            category="attack",
        )
        for i, v in enumerate(targets)
    )
    return replace(s, injected_events=events, protocol=protocol)


def _designate_pair(
    routes: list[tuple[int, ...]], rotation: int
) -> tuple[int, int]:
    """Pick the scenario's pair from the even/odd enumeration pairing.

    Starting at the rotation index, prefer the first pair whose routes are
    node-disjoint, so the safe comparator stays clean under every attack
    protocol; fall back to the minimum-overlap pair.
    """
    pairs = enumerate_route_pairs(len(routes))
    order = [pairs[(rotation + k) % len(pairs)] for k in range(len(pairs))]
    best = None
    best_overlap = None
    for a, b in order:
        overlap = len(set(routes[a]) & set(routes[b]))
        if overlap == 0:
            return a, b
        if best_overlap is None or overlap < best_overlap:
            best, best_overlap = (a, b), overlap
    return best


def _build_scenario(
    kind: str,
    regime_or_family: str,
    master_seed: int,
    index: int,
    snapshot: GraphSnapshot,
    routes: list[tuple[int, ...]],
    rng,
    background: tuple[FailureEvent, ...] = (),
) -> Scenario | None:
    if len(routes) < 2:
        return None
    attacked_idx, safe_idx = _designate_pair(routes, index)
    scenario = Scenario(
        scenario_id=f"{regime_or_family}-{master_seed}-{index}",
        snapshot=snapshot,
        candidate_routes=tuple(Route(seq) for seq in routes),
        attacked_index=attacked_idx,
        safe_index=safe_idx,
        background_events=background,
        regime=regime_or_family if kind == "regime" else None,
        family=regime_or_family if kind == "family" else None,
        seed=master_seed,
        split=split_for_seed(master_seed) if kind == "regime" else "eval",
    )
    return scenario


def _regime_snapshot(regime: str, rng) -> tuple[GraphSnapshot, list[tuple[int, ...]]]:
    n = int(rng.integers(20, 61))
    nodes = tuple(range(n))
    if regime in ("clean", "noise", "churn", "mixed"):
        edges = _random_tree(rng, n)
        if regime == "mixed":
            extra = round(0.3 * len(edges))
            existing = set(edges)
            while extra > 0:
                u, v = int(rng.integers(0, n)), int(rng.integers(0, n))
                if u != v and (u, v) not in existing:
                    existing.add((u, v))
                    edges.append((u, v))
                    extra -= 1
    else:  # non_tree: dense ER with half the edges reciprocated
        edges = []
        existing = set()
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.35:
                    e = (u, v) if rng.random() < 0.5 else (v, u)
                    edges.append(e)
                    existing.add(e)
        for e in list(edges):
            rev = (e[1], e[0])
            if rev not in existing and rng.random() < 0.5:
                edges.append(rev)
                existing.add(rev)

    values = _synth_values(rng, nodes, edges)
    routes = _enumerate_routes(rng, edges, nodes)

    if regime == "churn":
        # 20% of edges rewire between route enumeration and scoring.
        edge_list = list(edges)
        n_rewire = round(0.2 * len(edge_list))
        rewire_idx = rng.choice(len(edge_list), size=n_rewire, replace=False)
        existing = set(edge_list)
        for i in sorted(int(j) for j in rewire_idx):
            u, old = edge_list[i]
            existing.discard((u, old))
            for _ in range(20):
                v = int(rng.integers(0, n))
                if v != u and (u, v) not in existing:
                    edge_list[i] = (u, v)
                    existing.add((u, v))
                    values["edge_reliability"].pop((u, old), None)
                    values["edge_reliability"][(u, v)] = float(rng.uniform(0.7, 1.0))
                    break
            else:
                existing.add((u, old))
        edges = edge_list

    snapshot = GraphSnapshot(
        timestamp=SNAPSHOT_TIME, nodes=nodes, edges=tuple(edges), **values
    )
    return snapshot, routes


def generate_regime_scenarios(
    regime: str, n_scenarios: int, seed: int, protocol: str = "severity_load"
) -> list[Scenario]:
    """Deterministic scenarios for one stress regime and one master seed."""
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    regime_code = REGIMES.index(regime)
    out = []
    index = 0
    attempt = 0
    while len(out) < n_scenarios:
        rng = _rng_for(seed, regime_code, index, attempt)
        snapshot, routes = _regime_snapshot(regime, rng)
        scenario = _build_scenario("regime", regime, seed, index, snapshot, routes, rng)
        if scenario is None:
            attempt += 1
            if attempt > 50:
                raise DegenerateScenarioError(f"{regime}-{seed}-{index}")
            continue
        if regime == "noise":
            excluded = set(scenario.attacked_route.node_sequence) | set(
                scenario.safe_route.node_sequence
            )
            candidates = [v for v in snapshot.nodes if v not in excluded]
            n_bg = min(len(candidates), max(3, snapshot.n_nodes // 8))
            if candidates:
                picks = rng.choice(candidates, size=n_bg, replace=False)
                background = tuple(
                    FailureEvent(
                        time=float(rng.uniform(SNAPSHOT_TIME - 10.0, SNAPSHOT_TIME - 2.0)),
                        node=int(v),
                        severity=float(rng.uniform(0.0, 0.3)),
                        category="background",
                    )
                    for v in picks
                )
                scenario = replace(scenario, background_events=background)
        attack_seed = int(_rng_for(seed, regime_code, index, 0xEE).integers(0, 2**31))
        scenario = inject_attack(scenario, protocol, seed=attack_seed)
        out.append(scenario)
        index += 1
        attempt = 0
    return out


def _ba_tree(rng, n: int) -> list[tuple[int, int]]:
    # Preferential attachment with m = 1; direction parent -> new node.
    edges = [(0, 1)]
    attach_pool = [0, 1]
    for v in range(2, n):
        parent = int(attach_pool[rng.integers(0, len(attach_pool))])
        edges.append((parent, v))
        attach_pool.extend([parent, v])
    return edges


def _ws_ring(rng, n: int, rewire_p: float = 0.3) -> list[tuple[int, int]]:
    # k = 2 ring (one neighbor each side), each edge rewired with prob 0.3.
    edges = [(i, (i + 1) % n) for i in range(n)]
    existing = set(edges)
    for i, (u, v) in enumerate(edges):
        if rng.random() < rewire_p:
            for _ in range(20):
                w = int(rng.integers(0, n))
                if w != u and (u, w) not in existing:
                    existing.discard((u, v))
                    existing.add((u, w))
                    edges[i] = (u, w)
                    break
    return edges


def _er_graph(rng, n: int, p: float = 0.5) -> list[tuple[int, int]]:
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v) if rng.random() < 0.5 else (v, u))
    return edges


def generate_family_scenarios(
    family: str,
    seed_count: int = 20,
    profiles: Sequence[tuple[str, float]] = PROFILES,
    n: int = 7,
) -> list[Scenario]:
    """Cross-architecture suite: n=7 BA/WS/ER graphs x seeds x attack profiles."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    family_code = FAMILIES.index(family)
    out = []
    for seed in range(seed_count):
        for p_idx, (protocol, scale) in enumerate(profiles):
            attempt = 0
            while True:
                rng = _rng_for(1000 + family_code, seed, p_idx, attempt)
                if family == "BA":
                    edges = _ba_tree(rng, n)
                elif family == "WS":
                    edges = _ws_ring(rng, n)
                else:
                    edges = _er_graph(rng, n)
                nodes = tuple(range(n))
                values = _synth_values(rng, nodes, edges)
                snapshot = GraphSnapshot(
                    timestamp=SNAPSHOT_TIME, nodes=nodes, edges=tuple(edges), **values
                )
                routes = _enumerate_routes(rng, edges, nodes, max_len=n)
                scenario = _build_scenario(
                    "family", family, seed, p_idx, snapshot, routes, rng
                )
                if scenario is not None:
                    break
                attempt += 1
                if attempt > 50:
                    raise DegenerateScenarioError(f"{family}-{seed}-{p_idx}")
            scenario = replace(
                scenario, scenario_id=f"{family}-{seed}-{p_idx}-{protocol}-{scale}"
            )
            attack_seed = int(_rng_for(2000 + family_code, seed, p_idx).integers(0, 2**31))
            scenario = inject_attack(scenario, protocol, attack_seed, severity_scale=scale)
            out.append(scenario)
    return out
