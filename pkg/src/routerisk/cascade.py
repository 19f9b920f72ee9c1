"""Monte-Carlo validation of cascade criticality on expansion trees.

On a tree whose shell k holds ~b^k nodes, independent per-edge transmission
at rate p gives expected shell infections (b*p)^r, so the cascade turns
supercritical at p > 1/b = exp(-gamma) with gamma = ln b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import GraphSnapshot, NodeId


class NotATreeError(ValueError):
    """Cascade simulation requires a rooted tree (one in-edge per non-root)."""


@dataclass(frozen=True)
class CascadeConfig:
    branching: float = 2.0
    depth: int = 6
    p: float = 0.5
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("p must lie in [0, 1]")


@dataclass(frozen=True)
class CascadeStats:
    """Per-shell infection statistics across trials (shell 0 = root)."""

    mean_per_shell: tuple[float, ...]
    std_per_shell: tuple[float, ...]
    trials: int

    def standard_errors(self) -> tuple[float, ...]:
        return tuple(s / math.sqrt(self.trials) for s in self.std_per_shell)


def generate_expansion_tree(b: float, depth: int, seed: int = 0) -> GraphSnapshot:
    """Rooted tree whose shell k holds round(b^k) nodes.

    Children pick parents round-robin from the previous shell, so the tree is
    deterministic; integer b gives the exact b-ary tree.
    """
    if b < 1:
        raise ValueError("branching must be >= 1")
    shells: list[list[int]] = [[0]]
    next_id = 1
    for k in range(1, depth + 1):
        size = max(1, round(b**k))
        shells.append(list(range(next_id, next_id + size)))
        next_id += size
    edges = []
    for k in range(1, depth + 1):
        parents = shells[k - 1]
        for i, child in enumerate(shells[k]):
            edges.append((parents[i % len(parents)], child))
    nodes = tuple(range(next_id))
    return GraphSnapshot(
        timestamp=0.0,
        nodes=nodes,
        edges=tuple(edges),
        node_fitness={v: 1.0 for v in nodes},
    )


def _tree_layers(g: GraphSnapshot, root: NodeId) -> tuple[list[list[int]], dict[int, int]]:
    indeg = g.in_degree()
    if indeg[root] != 0:
        raise NotATreeError(f"root {root} has incoming edges")
    for v in g.nodes:
        if v != root and indeg[v] != 1:
            raise NotATreeError(f"node {v} has in-degree {indeg[v]}, expected 1")
    parent = {v: u for u, v in g.edges}
    adj = g.out_adjacency()
    layers = [[root]]
    seen = {root}
    while True:
        nxt = [c for v in layers[-1] for c in adj[v]]
        if not nxt:
            break
        layers.append(nxt)
        seen.update(nxt)
    if len(seen) != g.n_nodes:
        raise NotATreeError("graph has nodes unreachable from the root")
    return layers, parent


def simulate_cascade(
    g: GraphSnapshot, root: NodeId, p: float, trials: int, seed: int = 0
) -> CascadeStats:
    """Bond-percolation cascade from the root on a rooted tree.

    Per trial the root starts infected and every edge out of an infected node
    transmits independently with probability p; N_r counts infections in
    shell r. Trials are vectorized shell by shell.
    """
    layers, parent = _tree_layers(g, root)
    rng = np.random.default_rng(seed)
    means = [1.0]
    stds = [0.0]
    infected = {root: np.ones(trials, dtype=bool)}
    for layer in layers[1:]:
        parent_idx = [parent[v] for v in layer]
        parent_state = np.stack([infected[u] for u in parent_idx], axis=1)
        transmit = rng.random((trials, len(layer))) < p
        state = parent_state & transmit
        for j, v in enumerate(layer):
            infected[v] = state[:, j]
        counts = state.sum(axis=1)
        means.append(float(counts.mean()))
        stds.append(float(counts.std()))
    return CascadeStats(tuple(means), tuple(stds), trials)


@dataclass(frozen=True)
class CriticalityRow:
    p: float
    slope: float
    classification: str
    analytic_threshold: float


@dataclass(frozen=True)
class CriticalityReport:
    rows: tuple[CriticalityRow, ...]
    empirical_threshold: float | None
    analytic_threshold: float


def _growth_slope(means: Sequence[float]) -> float:
    """OLS slope of ln(mean N_r) on shell index, over shells with mass."""
    pts = [(r, math.log(m)) for r, m in enumerate(means) if m > 0]
    if len(pts) < 2:
        return -math.inf
    ks = np.array([r for r, _ in pts], dtype=float)
    ys = np.array([y for _, y in pts])
    km = ks.mean()
    return float(((ks - km) * (ys - ys.mean())).sum() / ((ks - km) ** 2).sum())


def criticality_report(
    b: float,
    p_grid: Sequence[float],
    depth: int = 6,
    trials: int = 100_000,
    seed: int = 0,
    epsilon: float = 0.05,
) -> CriticalityReport:
    """Classify each p on the grid as sub/critical/supercritical.

    The growth-rate estimate is the log-linear slope of mean N_r over r; the
    empirical threshold is the interpolated zero crossing of slope against
    ln p, reported next to the analytic threshold exp(-gamma) = 1/b.
    """
    tree = generate_expansion_tree(b, depth, seed)
    analytic = math.exp(-math.log(b)) if b > 1 else 1.0
    rows = []
    for i, p in enumerate(p_grid):
        stats = simulate_cascade(tree, 0, p, trials, seed + i)
        slope = _growth_slope(stats.mean_per_shell)
        if slope > epsilon:
            label = "supercritical"
        elif slope < -epsilon:
            label = "subcritical"
        else:
            label = "critical"
        rows.append(CriticalityRow(float(p), slope, label, analytic))

    empirical = None
    finite = [(r.p, r.slope) for r in rows if math.isfinite(r.slope)]
    for (p0, s0), (p1, s1) in zip(finite, finite[1:]):
        if s0 <= 0.0 <= s1 or s0 >= 0.0 >= s1:
            if s1 == s0:
                empirical = p0
            else:
                # slope is ~linear in ln p (slope ~ gamma + ln p)
                x0, x1 = math.log(p0), math.log(p1)
                empirical = math.exp(x0 - s0 * (x1 - x0) / (s1 - s0))
            break
    return CriticalityReport(tuple(rows), empirical, analytic)
