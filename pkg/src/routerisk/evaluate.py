"""Margin/win evaluation of scorers over scenario sets, plus gate labeling."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

from .gate import GateExample, extract_features
from .graph import RouteScore
from .scenarios import Scenario
from .stats import bootstrap_ci, exact_sign_test


@dataclass(frozen=True)
class ScenarioResult:
    scenario_id: str
    regime: str | None
    family: str | None
    split: str
    margin: float
    win: bool
    safe_score: RouteScore
    attacked_score: RouteScore


@dataclass
class EvaluationResult:
    scorer: str
    results: list[ScenarioResult] = field(default_factory=list)
    failed_scenarios: list[str] = field(default_factory=list)

    @property
    def margins(self) -> list[float]:
        return [r.margin for r in self.results]

    @property
    def win_rate(self) -> float:
        if not self.results:
            return 0.0
        return sum(r.win for r in self.results) / len(self.results)

    @property
    def mean_margin(self) -> float:
        if not self.results:
            return 0.0
        return sum(self.margins) / len(self.results)

    def by_group(self, key: str = "regime") -> dict[str, "EvaluationResult"]:
        groups: dict[str, EvaluationResult] = {}
        for r in self.results:
            g = getattr(r, key) or "none"
            groups.setdefault(g, EvaluationResult(scorer=self.scorer)).results.append(r)
        return groups

    def summary(self, ci_seed: int = 0) -> dict:
        def block(res: "EvaluationResult") -> dict:
            wins = [1.0 if r.win else 0.0 for r in res.results]
            out = {
                "n": len(res.results),
                "mean_margin": res.mean_margin,
                "win_rate": res.win_rate,
            }
            if res.results:
                out["margin_ci"] = bootstrap_ci(res.margins, seed=ci_seed)
                out["win_rate_ci"] = bootstrap_ci(wins, seed=ci_seed)
            return out

        per_regime = {k: block(v) for k, v in self.by_group("regime").items()}
        return {
            "scorer": self.scorer,
            "overall": block(self),
            "per_regime": per_regime,
            "failed": len(self.failed_scenarios),
        }


def _state_hash(scenario: Scenario) -> str:
    blob = json.dumps(
        {
            "snapshot": scenario.snapshot.to_dict(),
            "events": [e.to_dict() for e in scenario.all_events()],
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode()).hexdigest()


def evaluate(scorer, scenarios: Sequence[Scenario]) -> EvaluationResult:
    """Score both routes of every scenario with identical snapshot/event state.

    Margin = score(safe) - score(attacked); win = margin > 0 (strict). A
    scorer failure on a scenario flags and excludes it.
    """
    out = EvaluationResult(scorer=scorer.name)
    for s in scenarios:
        events = s.all_events()
        t = s.snapshot.timestamp
        try:
            before = _state_hash(s)
            attacked = scorer.score_route(s.snapshot, s.attacked_route, events, t)
            safe = scorer.score_route(s.snapshot, s.safe_route, events, t)
            assert _state_hash(s) == before, "scorer mutated scenario state"
        except Exception:
            out.failed_scenarios.append(s.scenario_id)
            continue
        margin = safe.score - attacked.score
        out.results.append(
            ScenarioResult(
                scenario_id=s.scenario_id,
                regime=s.regime,
                family=s.family,
                split=s.split,
                margin=margin,
                win=margin > 0.0,
                safe_score=safe,
                attacked_score=attacked,
            )
        )
    return out


def sign_test_vs(reference: EvaluationResult, other: EvaluationResult) -> dict:
    """Exact sign test on discordant win indicators, matched by scenario id."""
    ref = {r.scenario_id: r.win for r in reference.results}
    n_plus = n_minus = 0
    for r in other.results:
        if r.scenario_id not in ref:
            continue
        if r.win and not ref[r.scenario_id]:
            n_plus += 1
        elif not r.win and ref[r.scenario_id]:
            n_minus += 1
    return {
        "n_plus": n_plus,
        "n_minus": n_minus,
        "p_value": exact_sign_test(n_plus, n_minus),
    }


def build_gate_examples(
    scenarios: Sequence[Scenario],
    euclidean_scorer,
    hyperbolic_scorer,
) -> list[GateExample]:
    """Label scenarios by which geometry separates the pair better.

    For each scenario both geometries score both routes; the example's
    features come from the attacked route and Y = 1 iff the hyperbolic margin
    is at least the Euclidean one.
    """
    examples = []
    for s in scenarios:
        events = s.all_events()
        t = s.snapshot.timestamp
        m_hyp = (
            hyperbolic_scorer.score_route(s.snapshot, s.safe_route, events, t).score
            - hyperbolic_scorer.score_route(s.snapshot, s.attacked_route, events, t).score
        )
        m_euc = (
            euclidean_scorer.score_route(s.snapshot, s.safe_route, events, t).score
            - euclidean_scorer.score_route(s.snapshot, s.attacked_route, events, t).score
        )
        kappa, _ = hyperbolic_scorer.cache.fitted(s.snapshot)
        phi = extract_features(s.snapshot, s.attacked_route, kappa)
        examples.append(GateExample.from_margins(phi, m_hyp, m_euc))
    return examples
