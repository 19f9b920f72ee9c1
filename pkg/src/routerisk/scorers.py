"""Route scorers: the native comparator, baselines, and the blended sidecar.

Every scorer exposes score_route(snapshot, route, events, t) -> RouteScore
with the shared sign convention (higher = safer), so the evaluation loop can
treat them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .euclidean import EuclideanConfig, route_score_euclidean
from .gate import GateModel, apply_feature_mask, blend, extract_features, gate_forward
from .graph import (
    FailureEvent,
    GraphSnapshot,
    Route,
    RouteScore,
    cycle_rank_norm,
    validate_route,
)
from .hyperbolic import EmbeddingCache, HyperbolicConfig, route_score_hyperbolic
from .temporal import IntensityConfig, damped_intensity


def native_score(g: GraphSnapshot, r: Route) -> float:
    """Load-and-fitness comparator: mean fitness x (1 - 0.5 * mean load)."""
    validate_route(g, r)
    seq = r.node_sequence
    f_team = sum(g.node_fitness[v] for v in seq) / len(seq)
    load_mean = sum(g.node_load[v] for v in seq) / len(seq)
    return f_team * (1.0 - 0.5 * load_mean)


def structural_baseline_score(
    g: GraphSnapshot,
    r: Route,
    events: Sequence[FailureEvent],
    t: float,
    temporal_cfg: IntensityConfig = IntensityConfig(),
) -> float:
    """Zero-parameter spatial baseline: centrality + load + 2-hop neighborhood.

    score = -sum over route nodes of [ (deg/max_deg) * intensity + 0.5 * load
            + mean intensity over the 2-hop out-neighborhood ].
    """
    validate_route(g, r)
    adj = g.out_adjacency()
    degree = {v: len(adj[v]) for v in g.nodes}
    max_deg = max(degree.values()) if degree else 0

    lam_cache: dict[int, float] = {}

    def lam(v) -> float:
        if v not in lam_cache:
            lam_cache[v] = damped_intensity(v, t, events, None, temporal_cfg).damped
        return lam_cache[v]

    total = 0.0
    for v in r.node_sequence:
        two_hop = set(adj[v])
        for u in adj[v]:
            two_hop.update(adj[u])
        two_hop.discard(v)
        neighborhood = sum(lam(u) for u in two_hop) / len(two_hop) if two_hop else 0.0
        centrality = degree[v] / max_deg if max_deg else 0.0
        total += centrality * lam(v) + 0.5 * g.node_load[v] + neighborhood
    return -total


class NativeScorer:
    name = "native"

    def score_route(self, g, r, events, t) -> RouteScore:
        score = native_score(g, r)
        seq = r.node_sequence
        return RouteScore(
            route=r,
            score=score,
            terms={
                "fitness": sum(g.node_fitness[v] for v in seq) / len(seq),
                "load": sum(g.node_load[v] for v in seq) / len(seq),
            },
        )


class StructuralBaselineScorer:
    name = "structural"

    def __init__(self, temporal_cfg: IntensityConfig = IntensityConfig()):
        self.temporal_cfg = temporal_cfg

    def score_route(self, g, r, events, t) -> RouteScore:
        score = structural_baseline_score(g, r, events, t, self.temporal_cfg)
        return RouteScore(route=r, score=score, terms={})


class EuclideanScorer:
    name = "euclidean"

    def __init__(
        self,
        temporal_cfg: IntensityConfig = IntensityConfig(),
        cfg: EuclideanConfig = EuclideanConfig(),
    ):
        self.temporal_cfg = temporal_cfg
        self.cfg = cfg

    def score_route(self, g, r, events, t) -> RouteScore:
        return route_score_euclidean(g, r, events, t, self.temporal_cfg, self.cfg)


class HyperbolicScorer:
    def __init__(
        self,
        temporal_cfg: IntensityConfig = IntensityConfig(),
        cfg: HyperbolicConfig = HyperbolicConfig(),
        cache: EmbeddingCache | None = None,
        name: str = "hyperbolic",
    ):
        self.temporal_cfg = temporal_cfg
        self.cfg = cfg
        self.cache = cache if cache is not None else EmbeddingCache(cfg)
        self.name = name

    def score_route(self, g, r, events, t) -> RouteScore:
        return route_score_hyperbolic(
            g, r, events, t, self.temporal_cfg, self.cfg, self.cache
        )


def hand_switching_score(
    g: GraphSnapshot,
    r: Route,
    events: Sequence[FailureEvent],
    t: float,
    threshold: float = 0.05,
    euclidean: EuclideanScorer | None = None,
    hyperbolic: HyperbolicScorer | None = None,
) -> RouteScore:
    """Cycle-rank threshold switch: hyperbolic on near-trees, Euclidean otherwise."""
    euclidean = euclidean or EuclideanScorer()
    hyperbolic = hyperbolic or HyperbolicScorer()
    if cycle_rank_norm(g) < threshold:
        return hyperbolic.score_route(g, r, events, t)
    return euclidean.score_route(g, r, events, t)


class HandSwitchingScorer:
    name = "hand_switching"

    def __init__(
        self,
        threshold: float = 0.05,
        euclidean: EuclideanScorer | None = None,
        hyperbolic: HyperbolicScorer | None = None,
    ):
        self.threshold = threshold
        self.euclidean = euclidean or EuclideanScorer()
        self.hyperbolic = hyperbolic or HyperbolicScorer()

    def score_route(self, g, r, events, t) -> RouteScore:
        return hand_switching_score(
            g, r, events, t, self.threshold, self.euclidean, self.hyperbolic
        )


class BlendedScorer:
    """Learned sidecar: gate-weighted mixture of the two geometry scores."""

    name = "blended"

    def __init__(
        self,
        gate: GateModel,
        euclidean: EuclideanScorer | None = None,
        hyperbolic: HyperbolicScorer | None = None,
        feature_mask: Sequence[int] | None = None,
    ):
        self.gate = gate
        self.euclidean = euclidean or EuclideanScorer()
        self.hyperbolic = hyperbolic or HyperbolicScorer()
        self.feature_mask = feature_mask

    def score_route(self, g, r, events, t) -> RouteScore:
        kappa, _ = self.hyperbolic.cache.fitted(g)
        phi = extract_features(g, r, kappa)
        if self.feature_mask is not None:
            phi = apply_feature_mask(phi, self.feature_mask)
        pi = gate_forward(self.gate, phi)
        r_hyp = self.hyperbolic.score_route(g, r, events, t)
        r_euc = self.euclidean.score_route(g, r, events, t)
        return blend(pi, r_hyp, r_euc)


def build_scorers(
    names: Sequence[str],
    gate: GateModel | None = None,
    temporal_cfg: IntensityConfig = IntensityConfig(),
    euclidean_cfg: EuclideanConfig = EuclideanConfig(),
    hyperbolic_cfg: HyperbolicConfig = HyperbolicConfig(),
    cache: EmbeddingCache | None = None,
    feature_mask: Sequence[int] | None = None,
) -> list:
    """Instantiate scorers by name, sharing one embedding cache."""
    cache = cache if cache is not None else EmbeddingCache(hyperbolic_cfg)
    euc = EuclideanScorer(temporal_cfg, euclidean_cfg)
    hyp = HyperbolicScorer(temporal_cfg, hyperbolic_cfg, cache)
    out = []
    for name in names:
        if name == "native":
            out.append(NativeScorer())
        elif name == "structural":
            out.append(StructuralBaselineScorer(temporal_cfg))
        elif name == "euclidean":
            out.append(euc)
        elif name == "hyperbolic":
            out.append(hyp)
        elif name == "hyperbolic_no_excitation":
            cfg = HyperbolicConfig(
                **{**hyperbolic_cfg.__dict__, "excitation": False}
            )
            out.append(
                HyperbolicScorer(temporal_cfg, cfg, cache, name="hyperbolic_no_excitation")
            )
        elif name == "hand_switching":
            out.append(HandSwitchingScorer(euclidean=euc, hyperbolic=hyp))
        elif name == "blended":
            if gate is None:
                raise ValueError("blended scorer requires trained gate weights")
            out.append(BlendedScorer(gate, euc, hyp, feature_mask))
        else:
            raise ValueError(f"unknown scorer {name!r}")
    return out
