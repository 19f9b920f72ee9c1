"""Execution-graph data model and pure topology computations.

A snapshot is a timestamped directed graph with per-edge reliability and
per-node load/fitness. All operations here are pure functions of immutable
snapshots and are safe to call concurrently.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

NodeId = int
Edge = tuple[NodeId, NodeId]


class EmptyGraphError(ValueError):
    """Raised when an operation requires at least one node."""


class InvalidRouteError(ValueError):
    """Raised when a route references nodes absent from the snapshot."""


@dataclass(frozen=True)
class GraphSnapshot:
    """Directed execution graph at a time instant.

    Reliability, load and fitness default to 1.0 / 0.0 / 1.0 for entries not
    supplied at construction; all values must lie in [0, 1]. Self-loops and
    duplicate edges are rejected.
    """

    timestamp: float
    nodes: tuple[NodeId, ...]
    edges: tuple[Edge, ...]
    edge_reliability: Mapping[Edge, float] = field(default_factory=dict)
    node_load: Mapping[NodeId, float] = field(default_factory=dict)
    node_fitness: Mapping[NodeId, float] = field(default_factory=dict)

    def __post_init__(self):
        nodes = tuple(sorted(set(self.nodes)))
        if len(nodes) != len(self.nodes):
            raise ValueError("duplicate node ids")
        node_set = set(nodes)
        edges = tuple(sorted(self.edges))
        if len(set(edges)) != len(self.edges):
            raise ValueError("duplicate directed edges")
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if u not in node_set or v not in node_set:
                raise ValueError(f"edge ({u}, {v}) references undeclared node")
        rel = {e: float(self.edge_reliability.get(e, 1.0)) for e in edges}
        load = {v: float(self.node_load.get(v, 0.0)) for v in nodes}
        fit = {v: float(self.node_fitness.get(v, 1.0)) for v in nodes}
        for name, mapping in (("reliability", rel), ("load", load), ("fitness", fit)):
            for key, val in mapping.items():
                if not (0.0 <= val <= 1.0):
                    raise ValueError(f"{name}[{key}] = {val} outside [0, 1]")
        for key in self.edge_reliability:
            if tuple(key) not in rel:
                raise ValueError(f"reliability for undeclared edge {key}")
        for name, mapping in (("load", self.node_load), ("fitness", self.node_fitness)):
            for key in mapping:
                if key not in node_set:
                    raise ValueError(f"{name} for undeclared node {key}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "edge_reliability", rel)
        object.__setattr__(self, "node_load", load)
        object.__setattr__(self, "node_fitness", fit)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def out_adjacency(self) -> dict[NodeId, list[NodeId]]:
        adj: dict[NodeId, list[NodeId]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
        return adj

    def in_degree(self) -> dict[NodeId, int]:
        deg = {v: 0 for v in self.nodes}
        for _, v in self.edges:
            deg[v] += 1
        return deg

    def undirected_adjacency(self) -> dict[NodeId, set[NodeId]]:
        """Undirected projection; reciprocal pairs collapse to one edge."""
        adj: dict[NodeId, set[NodeId]] = {v: set() for v in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "nodes": [
                {"id": v, "load": self.node_load[v], "fitness": self.node_fitness[v]}
                for v in self.nodes
            ],
            "edges": [
                {"src": u, "dst": v, "reliability": self.edge_reliability[(u, v)]}
                for u, v in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "GraphSnapshot":
        # Unknown fields are ignored on read.
        nodes = tuple(int(n["id"]) for n in data["nodes"])
        edges = tuple((int(e["src"]), int(e["dst"])) for e in data["edges"])
        return cls(
            timestamp=float(data["timestamp"]),
            nodes=nodes,
            edges=edges,
            edge_reliability={
                (int(e["src"]), int(e["dst"])): float(e.get("reliability", 1.0))
                for e in data["edges"]
            },
            node_load={int(n["id"]): float(n.get("load", 0.0)) for n in data["nodes"]},
            node_fitness={int(n["id"]): float(n.get("fitness", 1.0)) for n in data["nodes"]},
        )

    def content_hash(self) -> str:
        """Stable hash of the snapshot content (used as embedding-cache key)."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class Route:
    """Ordered delegation chain of distinct nodes (length >= 1)."""

    node_sequence: tuple[NodeId, ...]

    def __post_init__(self):
        seq = tuple(self.node_sequence)
        if len(seq) < 1:
            raise ValueError("route must contain at least one node")
        if len(set(seq)) != len(seq):
            raise ValueError("route nodes must be distinct")
        object.__setattr__(self, "node_sequence", seq)

    def __len__(self) -> int:
        return len(self.node_sequence)


@dataclass(frozen=True)
class FailureEvent:
    """A single failure observation: (time, node, severity, category, route tag)."""

    time: float
    node: NodeId
    severity: float
    category: str = "failure"
    route_tag: str | None = None

    def __post_init__(self):
        if not (0.0 <= self.severity <= 1.0):
            raise ValueError(f"severity {self.severity} outside [0, 1]")
        if not math.isfinite(self.time) or self.time < 0:
            raise ValueError(f"event time {self.time} must be finite and non-negative")

    def to_dict(self) -> dict:
        d = {
            "time": self.time,
            "node": self.node,
            "severity": self.severity,
            "category": self.category,
        }
        if self.route_tag is not None:
            d["route_tag"] = self.route_tag
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "FailureEvent":
        return cls(
            time=float(data["time"]),
            node=int(data["node"]),
            severity=float(data["severity"]),
            category=str(data.get("category", "failure")),
            route_tag=data.get("route_tag"),
        )


@dataclass(frozen=True)
class ShellProfile:
    """BFS shell sizes by depth; unreachable nodes sit in a trailing fallback layer."""

    shell_sizes: tuple[int, ...]
    fallback_count: int = 0


@dataclass(frozen=True)
class RouteScore:
    """Scored route risk with a per-term breakdown. Higher score = safer."""

    route: Route
    score: float
    terms: dict[str, float] = field(default_factory=dict)


def validate_route(g: GraphSnapshot, r: Route) -> None:
    node_set = set(g.nodes)
    for v in r.node_sequence:
        if v not in node_set:
            raise InvalidRouteError(f"route node {v} not in snapshot")


def bfs_shells(g: GraphSnapshot) -> ShellProfile:
    """Multi-source BFS layering from the in-degree-0 roots.

    Falls back to the smallest node id when no root exists. Each reachable
    node gets its earliest depth; unreachable nodes are placed together in a
    fallback layer one past the deepest reached shell, so shell sizes always
    sum to |V|.
    """
    if g.n_nodes == 0:
        raise EmptyGraphError("bfs_shells requires a non-empty graph")
    indeg = g.in_degree()
    roots = [v for v in g.nodes if indeg[v] == 0]
    if not roots:
        roots = [g.nodes[0]]
    adj = g.out_adjacency()
    depth = {r: 0 for r in roots}
    queue = deque(roots)
    max_depth = 0
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in depth:
                depth[v] = depth[u] + 1
                max_depth = max(max_depth, depth[v])
                queue.append(v)
    unreachable = [v for v in g.nodes if v not in depth]
    sizes = [0] * (max_depth + 1)
    for d in depth.values():
        sizes[d] += 1
    if unreachable:
        sizes.append(len(unreachable))
    return ShellProfile(shell_sizes=tuple(sizes), fallback_count=len(unreachable))


def shell_growth_slope(profile: ShellProfile) -> tuple[float, float]:
    """OLS slope gamma_hat of ln(|V_k|+1) on depth k, and tanh(max(0, gamma_hat)).

    A single shell gives slope 0 by convention (no fit possible).
    """
    sizes = profile.shell_sizes
    if len(sizes) == 0:
        raise EmptyGraphError("shell profile is empty")
    if len(sizes) == 1:
        return 0.0, 0.0
    k = np.arange(len(sizes), dtype=float)
    y = np.log(np.asarray(sizes, dtype=float) + 1.0)
    k_mean = k.mean()
    denom = float(((k - k_mean) ** 2).sum())
    gamma_hat = float(((k - k_mean) * (y - y.mean())).sum() / denom)
    return gamma_hat, math.tanh(max(0.0, gamma_hat))


def _undirected_edge_count(g: GraphSnapshot) -> int:
    return len({frozenset(e) for e in g.edges})


def connected_components(g: GraphSnapshot) -> list[set[NodeId]]:
    """Connected components of the undirected projection."""
    adj = g.undirected_adjacency()
    seen: set[NodeId] = set()
    comps = []
    for start in g.nodes:
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        seen.add(start)
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.add(v)
                    queue.append(v)
        comps.append(comp)
    return comps


def cycle_rank_norm(g: GraphSnapshot) -> float:
    """(|E_und| - |V| + C) / |V| on the undirected projection, clamped to [0, 1]."""
    if g.n_nodes == 0:
        raise EmptyGraphError("cycle_rank_norm requires a non-empty graph")
    e_und = _undirected_edge_count(g)
    c = len(connected_components(g))
    return min(1.0, max(0.0, (e_und - g.n_nodes + c) / g.n_nodes))


def triangle_density(g: GraphSnapshot) -> float:
    """Global clustering coefficient of the undirected projection.

    3 x (triangle count) / (connected-triplet count); 0 when the graph has no
    connected triplets.
    """
    if g.n_nodes == 0:
        raise EmptyGraphError("triangle_density requires a non-empty graph")
    adj = g.undirected_adjacency()
    triplets = sum(len(nbrs) * (len(nbrs) - 1) // 2 for nbrs in adj.values())
    if triplets == 0:
        return 0.0
    triangles = 0
    for u in g.nodes:
        for v in adj[u]:
            if v <= u:
                continue
            for w in adj[u] & adj[v]:
                if w > v:
                    triangles += 1
    return 3.0 * triangles / triplets


def reciprocal_ratio(g: GraphSnapshot) -> float:
    """Fraction of directed edges whose reverse also exists; 0 if edgeless."""
    if g.n_nodes == 0:
        raise EmptyGraphError("reciprocal_ratio requires a non-empty graph")
    if not g.edges:
        return 0.0
    edge_set = set(g.edges)
    paired = sum(1 for u, v in g.edges if (v, u) in edge_set)
    return paired / len(g.edges)


def route_subgraph(g: GraphSnapshot, r: Route) -> GraphSnapshot:
    """Induced subgraph on the route's nodes, values carried over."""
    validate_route(g, r)
    keep = set(r.node_sequence)
    edges = tuple(e for e in g.edges if e[0] in keep and e[1] in keep)
    return GraphSnapshot(
        timestamp=g.timestamp,
        nodes=tuple(sorted(keep)),
        edges=edges,
        edge_reliability={e: g.edge_reliability[e] for e in edges},
        node_load={v: g.node_load[v] for v in keep},
        node_fitness={v: g.node_fitness[v] for v in keep},
    )


def shortest_path_matrix(g: GraphSnapshot) -> tuple[np.ndarray, dict[NodeId, int]]:
    """All-pairs unweighted shortest paths on the undirected projection.

    Returns (D, index) with D[i, j] = hop distance and inf for disconnected
    pairs; index maps node id to matrix row.
    """
    idx = {v: i for i, v in enumerate(g.nodes)}
    n = g.n_nodes
    adj = g.undirected_adjacency()
    D = np.full((n, n), np.inf)
    for s in g.nodes:
        si = idx[s]
        D[si, si] = 0.0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            du = D[si, idx[u]]
            for v in adj[u]:
                if math.isinf(D[si, idx[v]]):
                    D[si, idx[v]] = du + 1.0
                    queue.append(v)
    return D, idx


@dataclass(frozen=True)
class DeltaEstimate:
    """Gromov four-point delta estimate.

    ``exact`` marks full enumeration of 4-tuples; ``degenerate`` marks inputs
    with fewer than 4 usable nodes (value 0); ``connected`` is False when the
    value was computed on the largest component only.
    """

    value: float
    exact: bool
    degenerate: bool
    connected: bool


def gromov_delta(g: GraphSnapshot, samples: int = 200, seed: int = 0) -> DeltaEstimate:
    """Four-point Gromov delta of the undirected projection.

    For a 4-tuple (x, y, z, w) the three pairwise distance sums are formed and
    the tuple contributes (largest - second largest) / 2; the estimate is the
    maximum over sampled tuples. All C(n, 4) tuples are enumerated exactly
    whenever that count does not exceed ``samples``.
    """
    comps = connected_components(g) if g.n_nodes else []
    connected = len(comps) <= 1
    if not comps:
        return DeltaEstimate(0.0, True, True, connected)
    largest = max(comps, key=lambda c: (len(c), -min(c)))
    nodes = sorted(largest)
    if len(nodes) < 4:
        return DeltaEstimate(0.0, True, True, connected)
    D, idx = shortest_path_matrix(g)
    rows = [idx[v] for v in nodes]

    def contribution(a, b, c, d) -> float:
        s1 = D[a, b] + D[c, d]
        s2 = D[a, c] + D[b, d]
        s3 = D[a, d] + D[b, c]
        hi, mid = sorted((s1, s2, s3))[2], sorted((s1, s2, s3))[1]
        return (hi - mid) / 2.0

    total = math.comb(len(nodes), 4)
    if total <= samples:
        best = max(
            contribution(*combo) for combo in itertools.combinations(rows, 4)
        )
        return DeltaEstimate(float(best), True, False, connected)

    rng = np.random.default_rng(seed)
    chosen: set[tuple[int, ...]] = set()
    best = 0.0
    attempts = 0
    while len(chosen) < samples and attempts < samples * 50:
        combo = tuple(sorted(rng.choice(len(rows), size=4, replace=False)))
        attempts += 1
        if combo in chosen:
            continue
        chosen.add(combo)
        best = max(best, contribution(*(rows[i] for i in combo)))
    return DeltaEstimate(float(best), False, False, connected)
