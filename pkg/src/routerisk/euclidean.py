"""Euclidean diffusion propagation over the route subgraph.

Risk seeded from damped failure intensities diffuses along edges with
reliability- and load-dependent coupling; lightly loaded nodes recover
faster. The route score combines infected mass, frontier risk, tail risk,
latency, and bottleneck pressure (higher score = safer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .graph import (
    FailureEvent,
    GraphSnapshot,
    NodeId,
    Route,
    RouteScore,
    route_subgraph,
    validate_route,
)
from .temporal import IntensityConfig, damped_intensity_map

RISK_CLAMP = 10.0


class MissingIntensityError(KeyError):
    """Raised when a subgraph node has no seeded intensity."""


@dataclass(frozen=True)
class EuclideanConfig:
    steps: int = 5
    recovery_base: float = 0.2
    diffusion_strength: float = 0.5
    weight_infected_mass: float = 1.0
    weight_frontier: float = 1.0
    weight_tail: float = 1.0
    weight_latency: float = 1.0
    weight_bottleneck: float = 1.0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        for name in (
            "weight_infected_mass",
            "weight_frontier",
            "weight_tail",
            "weight_latency",
            "weight_bottleneck",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class PropagationState:
    risk: dict[NodeId, float]
    step: int = 0

    def __post_init__(self):
        for v, x in self.risk.items():
            if not math.isfinite(x) or x < 0:
                raise ValueError(f"risk[{v}] = {x} must be finite and >= 0")


def init_state(sub: GraphSnapshot, intensities: Mapping[NodeId, float]) -> PropagationState:
    """Seed propagation with one risk value per subgraph node."""
    missing = [v for v in sub.nodes if v not in intensities]
    if missing:
        raise MissingIntensityError(f"no intensity for nodes {missing}")
    return PropagationState(risk={v: float(intensities[v]) for v in sub.nodes}, step=0)


def propagate_step(
    state: PropagationState, sub: GraphSnapshot, cfg: EuclideanConfig = EuclideanConfig()
) -> PropagationState:
    """One synchronous diffusion step.

    x'(u) = (1 - rho_u) x(u) + sum over in-edges (v, u) of eta_vu x(v), with
    rho_u = recovery_base * (1 - load(u)) (loaded nodes recover slower) and
    eta_vu = diffusion_strength * reliability(v, u) * (0.5 + 0.5 load(u)).
    Values are clamped to [0, 10] to prevent blow-up.
    """
    new_risk = {}
    for u in sub.nodes:
        rho = cfg.recovery_base * (1.0 - sub.node_load[u])
        x = (1.0 - rho) * state.risk[u]
        gain = 0.5 + 0.5 * sub.node_load[u]
        for v, w in sub.edges:
            if w != u:
                continue
            eta = cfg.diffusion_strength * sub.edge_reliability[(v, w)] * gain
            x += eta * state.risk[v]
        new_risk[u] = min(RISK_CLAMP, max(0.0, x))
    return PropagationState(risk=new_risk, step=state.step + 1)


def _chain_edges(g: GraphSnapshot, r: Route) -> list[tuple[NodeId, NodeId]]:
    seq = r.node_sequence
    edge_set = set(g.edges)
    return [
        (seq[i], seq[i + 1]) for i in range(len(seq) - 1) if (seq[i], seq[i + 1]) in edge_set
    ]


def frontier_nodes(g: GraphSnapshot, r: Route) -> list[NodeId]:
    """Nodes in the last third of the route with an out-edge leaving the route."""
    seq = r.node_sequence
    tail_len = max(1, math.ceil(len(seq) / 3))
    tail = seq[len(seq) - tail_len :]
    on_route = set(seq)
    adj = g.out_adjacency()
    return [v for v in tail if any(u not in on_route for u in adj[v])]


def route_score_euclidean(
    g: GraphSnapshot,
    r: Route,
    events: Sequence[FailureEvent],
    t: float,
    temporal_cfg: IntensityConfig = IntensityConfig(),
    cfg: EuclideanConfig = EuclideanConfig(),
    route_id: str | None = None,
) -> RouteScore:
    """Run K diffusion steps on the induced route subgraph and score the result.

    score = -(w_im * InfectedMass + w_fr * Frontier + w_tl * Tail
              + w_lt * Latency + w_bn * Bottleneck)

    InfectedMass = mean final risk; Frontier = mean final risk over frontier
    nodes (last third of the route with out-edges leaving it); Tail = max
    final risk; Latency = mean (1 - reliability) over the chain edges the
    route traverses; Bottleneck = max route node load.
    """
    validate_route(g, r)
    sub = route_subgraph(g, r)
    seeds = damped_intensity_map(sub.nodes, t, events, route_id, temporal_cfg)
    state = init_state(sub, seeds)
    for _ in range(cfg.steps):
        state = propagate_step(state, sub, cfg)

    seq = r.node_sequence
    final = state.risk
    infected_mass = sum(final.values()) / len(final)
    fnodes = frontier_nodes(g, r)
    frontier = sum(final[v] for v in fnodes) / len(fnodes) if fnodes else 0.0
    tail = max(final.values())
    chain = _chain_edges(g, r)
    latency = (
        sum(1.0 - g.edge_reliability[e] for e in chain) / len(chain) if chain else 0.0
    )
    bottleneck = max(g.node_load[v] for v in seq)

    terms = {
        "infected_mass": infected_mass,
        "frontier": frontier,
        "tail": tail,
        "latency": latency,
        "bottleneck": bottleneck,
    }
    score = -(
        cfg.weight_infected_mass * infected_mass
        + cfg.weight_frontier * frontier
        + cfg.weight_tail * tail
        + cfg.weight_latency * latency
        + cfg.weight_bottleneck * bottleneck
    )
    return RouteScore(route=r, score=score, terms=terms)
