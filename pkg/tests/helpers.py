"""Shared graph builders and independent oracles for the test suite."""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np

from routerisk.graph import FailureEvent, GraphSnapshot, Route


def snap(edges, n=None, timestamp=0.0, loads=None, fitness=None, reliability=None):
    nodes = set()
    for u, v in edges:
        nodes.update((u, v))
    if n is not None:
        nodes.update(range(n))
    if not nodes:
        nodes = {0}
    return GraphSnapshot(
        timestamp=timestamp,
        nodes=tuple(sorted(nodes)),
        edges=tuple(edges),
        node_load=loads or {},
        node_fitness=fitness or {},
        edge_reliability=reliability or {},
    )


def binary_tree(depth):
    edges = []
    for v in range(1, 2 ** (depth + 1) - 1):
        edges.append(((v - 1) // 2, v))
    return snap(edges)


def random_tree_edges(rng, n):
    return [(int(rng.integers(0, v)), v) for v in range(1, n)]


def random_digraph(rng, n, p=0.2):
    edges = [
        (u, v)
        for u in range(n)
        for v in range(n)
        if u != v and rng.random() < p
    ]
    return snap(edges, n=n)


def relabel(g: GraphSnapshot, perm: dict):
    return GraphSnapshot(
        timestamp=g.timestamp,
        nodes=tuple(sorted(perm[v] for v in g.nodes)),
        edges=tuple((perm[u], perm[v]) for u, v in g.edges),
        edge_reliability={(perm[u], perm[v]): r for (u, v), r in g.edge_reliability.items()},
        node_load={perm[v]: x for v, x in g.node_load.items()},
        node_fitness={perm[v]: x for v, x in g.node_fitness.items()},
    )


def event(time, node, severity, category="failure", route_tag=None):
    return FailureEvent(time=time, node=node, severity=severity, category=category, route_tag=route_tag)


# oracles -------------------------------------------------------------------

def ols_slope_oracle(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return float(coef[0])


def undirected_distances_oracle(g: GraphSnapshot):
    adj = {v: set() for v in g.nodes}
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    dist = {}
    for s in g.nodes:
        d = {s: 0}
        q = deque([s])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if w not in d:
                    d[w] = d[u] + 1
                    q.append(w)
        dist[s] = d
    return dist


def gromov_delta_oracle(g: GraphSnapshot):
    """Exhaustive four-point delta over the largest component."""
    dist = undirected_distances_oracle(g)
    comps = []
    seen = set()
    for s in g.nodes:
        if s in seen:
            continue
        comp = set(dist[s])
        seen |= comp
        comps.append(sorted(comp))
    nodes = max(comps, key=len)
    best = 0.0
    for x, y, z, w in itertools.combinations(nodes, 4):
        sums = sorted(
            (dist[x][y] + dist[z][w], dist[x][z] + dist[y][w], dist[x][w] + dist[y][z])
        )
        best = max(best, (sums[2] - sums[1]) / 2)
    return best
