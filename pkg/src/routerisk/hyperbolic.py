"""Poincare-ball embedding, curvature fitting, and the hyperbolic route score.

Nodes are embedded in the ball of radius 1/sqrt(kappa) by minimizing the
stress between geodesic and graph distances; the curvature magnitude kappa is
fitted by golden-section search over that stress. Tree-like graphs embed
deep (large radial coordinates), which the tail-risk term amplifies
exponentially.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .graph import (
    FailureEvent,
    GraphSnapshot,
    NodeId,
    Route,
    RouteScore,
    connected_components,
    shortest_path_matrix,
    validate_route,
)
from .temporal import IntensityConfig, damped_intensity_map

CURVATURE_MIN = 0.10
CURVATURE_MAX = 4.50
BALL_MARGIN = 0.999  # coords kept at norm <= BALL_MARGIN / sqrt(kappa)

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class OutOfBallError(ValueError):
    """Raised for points on or outside the Poincare ball boundary."""


@dataclass(frozen=True)
class HyperbolicConfig:
    dimension: int = 2
    curvature_min: float = CURVATURE_MIN
    curvature_max: float = CURVATURE_MAX
    embed_iterations: int = 80
    embed_seed: int = 0
    search_tolerance: float = 0.01
    search_max_evals: int = 40
    excitation: bool = True
    weight_compactness: float = 1.0
    weight_tail: float = 1.0
    weight_frontier: float = 1.0
    weight_bottleneck: float = 1.0
    weight_decoder: float = 1.0


@dataclass(frozen=True)
class HyperbolicEmbedding:
    dimension: int
    curvature: float
    coords: dict[NodeId, np.ndarray]
    final_stress: float
    connected: bool = True


def geodesic_distance(z1: np.ndarray, z2: np.ndarray, kappa: float) -> float:
    """Poincare-ball distance for curvature -kappa.

    d(z1, z2) = (1/sqrt(k)) * arcosh(1 + 2k|z1-z2|^2 /
                ((1 - k|z1|^2)(1 - k|z2|^2)))
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    a1 = 1.0 - kappa * float(z1 @ z1)
    a2 = 1.0 - kappa * float(z2 @ z2)
    if a1 <= 0.0 or a2 <= 0.0:
        raise OutOfBallError("point on or outside the ball boundary")
    diff = z1 - z2
    arg = 1.0 + 2.0 * kappa * float(diff @ diff) / (a1 * a2)
    return math.acosh(max(1.0, arg)) / math.sqrt(kappa)


def golden_section_minimize(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tolerance: float = 0.01,
    max_evals: int = 40,
) -> tuple[float, float, list[tuple[float, float]]]:
    """Golden-section search for a 1-D minimum on [lo, hi].

    Evaluates the bracket endpoints as well and returns the best evaluated
    point, its value, and the full evaluation history. Stops when the bracket
    width drops below ``tolerance`` or after ``max_evals`` evaluations.
    """
    if hi <= lo:
        raise ValueError("need lo < hi")
    history: list[tuple[float, float]] = []

    def ev(x: float) -> float:
        y = f(x)
        history.append((x, y))
        return y

    ev(lo)
    ev(hi)
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = ev(c), ev(d)
    while (b - a) > tolerance and len(history) < max_evals:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = ev(d)
    best_x, best_f = min(history, key=lambda p: p[1])
    return best_x, best_f, history


def _stress_and_grad(
    Z: np.ndarray, D: np.ndarray, mask: np.ndarray, kappa: float
) -> tuple[float, np.ndarray]:
    """Stress sum over finite-distance pairs and its gradient in Z.

    With a_i = 1 - k|z_i|^2, q_ij = |z_i - z_j|^2 and
    A_ij = 1 + 2k q_ij / (a_i a_j), the pair distance is arcosh(A)/sqrt(k);
    the gradient follows from d(arcosh A) = dA / sqrt(A^2 - 1).
    """
    sq = (Z**2).sum(axis=1)
    a = 1.0 - kappa * sq  # > 0 inside the ball
    diff_sq = sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T)
    np.maximum(diff_sq, 0.0, out=diff_sq)
    aa = a[:, None] * a[None, :]
    A = 1.0 + 2.0 * kappa * diff_sq / aa
    np.fill_diagonal(A, 1.0)
    rho = np.arccosh(np.maximum(A, 1.0)) / math.sqrt(kappa)

    resid = np.where(mask, rho - D, 0.0)
    stress = 0.5 * float((resid**2).sum())  # each unordered pair counted once

    droot = np.sqrt(np.maximum(A**2 - 1.0, 1e-24))
    W = 2.0 * resid / (math.sqrt(kappa) * droot)
    np.fill_diagonal(W, 0.0)

    c1 = 4.0 * kappa / aa
    c2 = 4.0 * kappa * kappa * diff_sq / (a[:, None] ** 2 * a[None, :])
    wc1 = W * c1
    grad = Z * wc1.sum(axis=1)[:, None] - wc1 @ Z + ((W * c2).sum(axis=1))[:, None] * Z
    return stress, grad


def _project_into_ball(Z: np.ndarray, kappa: float) -> np.ndarray:
    max_norm = BALL_MARGIN / math.sqrt(kappa)
    norms = np.linalg.norm(Z, axis=1)
    factor = np.minimum(1.0, max_norm / np.maximum(norms, 1e-300))
    return Z * factor[:, None]


def _embed_from_distances(
    D: np.ndarray,
    kappa: float,
    dimension: int,
    seed: int,
    iterations: int,
) -> tuple[np.ndarray, float]:
    n = D.shape[0]
    mask = np.isfinite(D) & ~np.eye(n, dtype=bool)
    rng = np.random.default_rng(seed)
    Z = rng.normal(scale=0.05 / math.sqrt(kappa), size=(n, dimension))
    Dm = np.where(mask, D, 0.0)

    stress, grad = _stress_and_grad(Z, Dm, mask, kappa)
    best_Z, best_stress = Z.copy(), stress
    step = 0.05
    for _ in range(iterations):
        moved = False
        for _ in range(20):  # backtracking: halve until the stress decreases
            cand = _project_into_ball(Z - step * grad, kappa)
            cand_stress, cand_grad = _stress_and_grad(cand, Dm, mask, kappa)
            if cand_stress < stress:
                Z, stress, grad = cand, cand_stress, cand_grad
                step *= 1.2
                moved = True
                break
            step *= 0.5
        if stress < best_stress:
            best_Z, best_stress = Z.copy(), stress
        if not moved or step < 1e-14:
            break
    return best_Z, best_stress


def embed(
    g: GraphSnapshot,
    kappa: float,
    dimension: int = 2,
    seed: int = 0,
    iterations: int = 80,
) -> HyperbolicEmbedding:
    """Stress-minimizing Poincare embedding of the undirected projection.

    Minimizes sum over node pairs of (geodesic(z_u, z_v) - d_G(u, v))^2 by
    gradient descent with backtracking, projecting back inside the ball after
    every step. Pairs in different components (infinite d_G) are excluded;
    the embedding is flagged connected=False in that case.
    """
    if g.n_nodes == 0:
        raise ValueError("cannot embed an empty graph")
    D, idx = shortest_path_matrix(g)
    connected = len(connected_components(g)) <= 1
    if g.n_nodes == 1:
        coords = {g.nodes[0]: np.zeros(dimension)}
        return HyperbolicEmbedding(dimension, kappa, coords, 0.0, connected)
    Z, stress = _embed_from_distances(D, kappa, dimension, seed, iterations)
    coords = {v: Z[idx[v]].copy() for v in g.nodes}
    return HyperbolicEmbedding(dimension, kappa, coords, stress, connected)


def fit_curvature(
    g: GraphSnapshot,
    dimension: int = 2,
    seed: int = 0,
    cfg: HyperbolicConfig = HyperbolicConfig(),
) -> tuple[float, HyperbolicEmbedding]:
    """Golden-section search for the curvature minimizing embedding stress."""
    comps = connected_components(g) if g.n_nodes else []
    largest = max((len(c) for c in comps), default=0)
    if largest < 2:
        coords = {v: np.zeros(dimension) for v in g.nodes}
        return cfg.curvature_min, HyperbolicEmbedding(
            dimension, cfg.curvature_min, coords, 0.0, len(comps) <= 1
        )
    D, idx = shortest_path_matrix(g)
    connected = len(comps) <= 1

    def stress_at(kappa: float) -> float:
        _, s = _embed_from_distances(D, kappa, dimension, seed, cfg.embed_iterations)
        return s

    best_kappa, _, _ = golden_section_minimize(
        stress_at,
        cfg.curvature_min,
        cfg.curvature_max,
        tolerance=cfg.search_tolerance,
        max_evals=cfg.search_max_evals,
    )
    Z, stress = _embed_from_distances(
        D, best_kappa, dimension, seed, cfg.embed_iterations
    )
    coords = {v: Z[idx[v]].copy() for v in g.nodes}
    return best_kappa, HyperbolicEmbedding(dimension, best_kappa, coords, stress, connected)


class EmbeddingCache:
    """Fitted embeddings keyed by snapshot content hash.

    Reads are lock-free; inserts take a lock, so concurrent scoring calls on
    the same snapshot may fit twice but never corrupt the cache.
    """

    def __init__(self, cfg: HyperbolicConfig = HyperbolicConfig()):
        self.cfg = cfg
        self._entries: dict[str, tuple[float, HyperbolicEmbedding]] = {}
        self._lock = threading.Lock()

    def fitted(self, g: GraphSnapshot) -> tuple[float, HyperbolicEmbedding]:
        key = g.content_hash()
        hit = self._entries.get(key)
        if hit is not None:
            return hit
        result = fit_curvature(g, self.cfg.dimension, self.cfg.embed_seed, self.cfg)
        with self._lock:
            self._entries.setdefault(key, result)
        return self._entries[key]

    def __len__(self) -> int:
        return len(self._entries)


def route_score_hyperbolic(
    g: GraphSnapshot,
    r: Route,
    events: Sequence[FailureEvent],
    t: float,
    temporal_cfg: IntensityConfig = IntensityConfig(),
    cfg: HyperbolicConfig = HyperbolicConfig(),
    cache: EmbeddingCache | None = None,
    route_id: str | None = None,
) -> RouteScore:
    """Hyperbolic route score w1*C - w2*T - w3*F - w4*B + w5*D (higher = safer).

    C (compactness) = 1 / (1 + mean pairwise geodesic among route nodes);
    T (tail) = max over route nodes of intensity * exp(radial coordinate),
    amplifying risk by hyperbolic depth; F (frontier) = sum of intensity *
    out-degree into non-route nodes; B (bottleneck) = max route load;
    D (decoder consistency) = 1 / (1 + mean |geodesic - d_G| over the chain
    edges the route traverses).
    """
    validate_route(g, r)
    if cache is not None:
        kappa, emb = cache.fitted(g)
    else:
        kappa, emb = fit_curvature(g, cfg.dimension, cfg.embed_seed, cfg)
    lam = damped_intensity_map(
        r.node_sequence, t, events, route_id, temporal_cfg, excitation=cfg.excitation
    )

    seq = r.node_sequence
    coords = emb.coords
    origin = np.zeros(cfg.dimension)

    pair_dists = [
        geodesic_distance(coords[u], coords[v], kappa)
        for i, u in enumerate(seq)
        for v in seq[i + 1 :]
    ]
    mean_pair = sum(pair_dists) / len(pair_dists) if pair_dists else 0.0
    compactness = 1.0 / (1.0 + mean_pair)

    tail = max(
        lam[v] * math.exp(geodesic_distance(origin, coords[v], kappa)) for v in seq
    )

    on_route = set(seq)
    adj = g.out_adjacency()
    frontier = sum(lam[v] * sum(1 for u in adj[v] if u not in on_route) for v in seq)

    bottleneck = max(g.node_load[v] for v in seq)

    # A traversed chain edge that exists has undirected graph distance 1.
    edge_set = set(g.edges)
    errs = [
        abs(geodesic_distance(coords[seq[i]], coords[seq[i + 1]], kappa) - 1.0)
        for i in range(len(seq) - 1)
        if (seq[i], seq[i + 1]) in edge_set
    ]
    decoder = 1.0 / (1.0 + (sum(errs) / len(errs) if errs else 0.0))

    terms = {
        "compactness": compactness,
        "tail": tail,
        "frontier": frontier,
        "bottleneck": bottleneck,
        "decoder": decoder,
        "curvature": kappa,
    }
    score = (
        cfg.weight_compactness * compactness
        - cfg.weight_tail * tail
        - cfg.weight_frontier * frontier
        - cfg.weight_bottleneck * bottleneck
        + cfg.weight_decoder * decoder
    )
    return RouteScore(route=r, score=score, terms=terms)
