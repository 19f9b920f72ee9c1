"""Per-node temporal failure statistics.

Base intensity is an exponentially decayed, severity- and category-weighted
sum of past failures; a gap-based burst statistic adds a bounded bonus when
failures cluster in time. None of this is a full Hawkes intensity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .graph import FailureEvent, NodeId

BURST_COEFFICIENT = 0.14
BASELINE_THRESHOLD = 1.0


@dataclass(frozen=True)
class IntensityConfig:
    """Temporal decay parameters.

    ``half_life`` is the e-folding time of the base decay kernel
    exp(-(t - tau)/h); ``excitation_decay`` plays the same role for
    inter-arrival gaps in the burst statistic. Unknown categories multiply
    by 1.0.
    """

    half_life: float = 30.0
    excitation_decay: float = 5.0
    category_multiplier: dict[str, float] = field(default_factory=dict)
    burst_coefficient: float = BURST_COEFFICIENT
    baseline_threshold: float = BASELINE_THRESHOLD

    def __post_init__(self):
        if self.half_life <= 0:
            raise ValueError("half_life must be > 0")
        if self.excitation_decay <= 0:
            raise ValueError("excitation_decay must be > 0")
        for cat, a in self.category_multiplier.items():
            if a <= 0:
                raise ValueError(f"category multiplier for {cat!r} must be > 0")

    def alpha(self, category: str) -> float:
        return self.category_multiplier.get(category, 1.0)


@dataclass(frozen=True)
class NodeIntensity:
    """Intensity components for one node at one time."""

    base: float
    burst: float
    mean_decayed: float
    damped: float
    event_count: int


def _included(
    v: NodeId, t: float, events: Iterable[FailureEvent], route: str | None
) -> list[FailureEvent]:
    # Events tagged with a different route are excluded; untagged apply to all.
    return [
        e
        for e in events
        if e.node == v and e.time <= t and (e.route_tag is None or e.route_tag == route)
    ]


def base_intensity(
    v: NodeId,
    t: float,
    events: Sequence[FailureEvent],
    route: str | None = None,
    cfg: IntensityConfig = IntensityConfig(),
) -> float:
    """Decayed failure intensity: sum of s_i * exp(-(t - tau_i)/h) * alpha(c_i)."""
    return sum(
        e.severity * math.exp(-(t - e.time) / cfg.half_life) * cfg.alpha(e.category)
        for e in _included(v, t, events, route)
    )


def burst_statistic(
    v: NodeId,
    t: float,
    events: Sequence[FailureEvent],
    route: str | None = None,
    cfg: IntensityConfig = IntensityConfig(),
) -> float:
    """Mean of exp(-gap/delta) over consecutive inter-arrival gaps; 0 below 2 events."""
    times = sorted(e.time for e in _included(v, t, events, route))
    if len(times) < 2:
        return 0.0
    gaps = [times[q + 1] - times[q] for q in range(len(times) - 1)]
    return sum(math.exp(-gap / cfg.excitation_decay) for gap in gaps) / len(gaps)


def damped_intensity(
    v: NodeId,
    t: float,
    events: Sequence[FailureEvent],
    route: str | None = None,
    cfg: IntensityConfig = IntensityConfig(),
) -> NodeIntensity:
    """Burst-augmented intensity.

    damped = base + 0.14 * burst * tanh(mean_decayed) * m^(-1/2)
                  * (1 + max(0, base - lambda0))^(-1)

    where mean_decayed is the mean decayed severity over the m included
    events. Every bonus factor lies in [0, 1], so damped - base <= 0.14.
    """
    included = _included(v, t, events, route)
    m = len(included)
    lam = base_intensity(v, t, events, route, cfg)
    if m == 0:
        return NodeIntensity(0.0, 0.0, 0.0, 0.0, 0)
    mean_decayed = lam / m
    b = burst_statistic(v, t, events, route, cfg)
    saturation = math.tanh(mean_decayed)
    diversity = m ** -0.5
    overload = 1.0 / (1.0 + max(0.0, lam - cfg.baseline_threshold))
    damped = lam + cfg.burst_coefficient * b * saturation * diversity * overload
    return NodeIntensity(lam, b, mean_decayed, damped, m)


def damped_intensity_map(
    nodes: Iterable[NodeId],
    t: float,
    events: Sequence[FailureEvent],
    route: str | None = None,
    cfg: IntensityConfig = IntensityConfig(),
    excitation: bool = True,
) -> dict[NodeId, float]:
    """Damped intensity per node; with excitation disabled, the base intensity."""
    out = {}
    for v in nodes:
        ni = damped_intensity(v, t, events, route, cfg)
        out[v] = ni.damped if excitation else ni.base
    return out


def events_to_jsonl(events: Sequence[FailureEvent]) -> str:
    return "\n".join(json.dumps(e.to_dict(), sort_keys=True) for e in events)


def events_from_jsonl(text: str) -> list[FailureEvent]:
    return [
        FailureEvent.from_dict(json.loads(line))
        for line in text.splitlines()
        if line.strip()
    ]
