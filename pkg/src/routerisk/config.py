"""Run configuration: one JSON document covering every command's knobs."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .euclidean import EuclideanConfig
from .gate import N_FEATURES, TrainingConfig
from .hyperbolic import HyperbolicConfig
from .scenarios import EVAL_SEEDS, REGIMES, TRAIN_SEEDS
from .temporal import IntensityConfig


@dataclass(frozen=True)
class BenchmarkParams:
    regimes: tuple[str, ...] = REGIMES
    scenarios_per_seed: int = 10
    train_seeds: tuple[int, ...] = TRAIN_SEEDS
    eval_seeds: tuple[int, ...] = EVAL_SEEDS
    protocol: str = "severity_load"
    family_seed_count: int = 20
    feature_mask: tuple[int, ...] = (1,) * N_FEATURES

    def __post_init__(self):
        if len(self.feature_mask) != N_FEATURES:
            raise ValueError(f"feature mask must have {N_FEATURES} bits")
        if any(s < 0 for s in self.train_seeds + self.eval_seeds):
            raise ValueError("seeds must be non-negative")


@dataclass(frozen=True)
class CascadeParams:
    branching: tuple[float, ...] = (2.0, 3.0)
    p_grid: tuple[float, ...] = tuple(round(0.1 + 0.05 * i, 2) for i in range(17))
    depth: int = 6
    trials: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    temporal: IntensityConfig = field(default_factory=IntensityConfig)
    euclidean: EuclideanConfig = field(default_factory=EuclideanConfig)
    hyperbolic: HyperbolicConfig = field(default_factory=HyperbolicConfig)
    gate: TrainingConfig = field(default_factory=TrainingConfig)
    benchmark: BenchmarkParams = field(default_factory=BenchmarkParams)
    cascade: CascadeParams = field(default_factory=CascadeParams)
    scorers: tuple[str, ...] = (
        "native",
        "euclidean",
        "structural",
        "hand_switching",
        "hyperbolic",
        "hyperbolic_no_excitation",
        "blended",
    )
    bench_calls: int = 1000

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        def sub(klass, key, tuple_fields=()):
            block = dict(data.get(key, {}))
            for tf in tuple_fields:
                if tf in block:
                    block[tf] = tuple(block[tf])
            return klass(**block)

        return cls(
            temporal=sub(IntensityConfig, "temporal"),
            euclidean=sub(EuclideanConfig, "euclidean"),
            hyperbolic=sub(HyperbolicConfig, "hyperbolic"),
            gate=sub(TrainingConfig, "gate"),
            benchmark=sub(
                BenchmarkParams,
                "benchmark",
                tuple_fields=("regimes", "train_seeds", "eval_seeds", "feature_mask"),
            ),
            cascade=sub(CascadeParams, "cascade", tuple_fields=("branching", "p_grid")),
            scorers=tuple(data.get("scorers", cls.scorers)),
            bench_calls=int(data.get("bench_calls", 1000)),
        )

    def emit(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.parse(fh.read())
