"""Command-line harness: gen, train, eval, cascade, bench.

Exit codes: 0 success, 1 usage error, 2 data/IO error. All data outputs are
deterministic given the config and its seeds; only bench timings vary.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import statistics
import sys
import time
from pathlib import Path

from .cascade import criticality_report
from .config import RunConfig
from .evaluate import build_gate_examples, evaluate, sign_test_vs
from .gate import GateModel, TrainingConfig, gate_diagnostics, gate_forward, train_gate
from .hyperbolic import EmbeddingCache
from .scenarios import (
    FAMILIES,
    REGIMES,
    Scenario,
    generate_family_scenarios,
    generate_regime_scenarios,
    inject_attack,
    scenario_to_jsonl,
    scenarios_from_jsonl,
)
from .scorers import EuclideanScorer, HyperbolicScorer, build_scorers

USAGE_ERROR = 1
DATA_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load_config(args) -> RunConfig:
    if args.config:
        try:
            cfg = RunConfig.load(args.config)
        except FileNotFoundError as exc:
            raise FileNotFoundError(f"config file not found: {args.config}") from exc
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise UsageError(f"bad config {args.config}: {exc}") from exc
    else:
        cfg = RunConfig()
    return cfg


def _regime_scenarios(cfg: RunConfig, seeds) -> list[Scenario]:
    out = []
    for regime in cfg.benchmark.regimes:
        if regime not in REGIMES:
            raise UsageError(f"unknown regime {regime!r}")
        for seed in seeds:
            out.extend(
                generate_regime_scenarios(
                    regime, cfg.benchmark.scenarios_per_seed, seed, cfg.benchmark.protocol
                )
            )
    return out


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_gen(cfg: RunConfig, out_dir: Path) -> int:
    eval_scenarios = _regime_scenarios(cfg, cfg.benchmark.eval_seeds)
    train_scenarios = _regime_scenarios(cfg, cfg.benchmark.train_seeds)
    family_scenarios = []
    for family in FAMILIES:
        family_scenarios.extend(
            generate_family_scenarios(family, cfg.benchmark.family_seed_count)
        )
    _write(out_dir / "scenarios_eval.jsonl", scenario_to_jsonl(eval_scenarios) + "\n")
    _write(out_dir / "scenarios_train.jsonl", scenario_to_jsonl(train_scenarios) + "\n")
    _write(out_dir / "scenarios_family.jsonl", scenario_to_jsonl(family_scenarios) + "\n")
    print(
        f"wrote {len(eval_scenarios)} eval + {len(train_scenarios)} train regime "
        f"scenarios and {len(family_scenarios)} family scenarios to {out_dir}"
    )
    return 0


def _read_scenarios(path: Path) -> list[Scenario]:
    if not path.exists():
        raise FileNotFoundError(f"scenario file not found: {path} (run `gen` first)")
    return scenarios_from_jsonl(path.read_text())


def cmd_train(cfg: RunConfig, out_dir: Path) -> int:
    train_scenarios = _read_scenarios(out_dir / "scenarios_train.jsonl")
    cache = EmbeddingCache(cfg.hyperbolic)
    euc = EuclideanScorer(cfg.temporal, cfg.euclidean)
    hyp = HyperbolicScorer(cfg.temporal, cfg.hyperbolic, cache)
    examples = build_gate_examples(train_scenarios, euc, hyp)
    model = train_gate(examples, cfg.gate)
    model.save(out_dir / "gate_weights.json")
    audit = [
        {
            "scenario_id": s.scenario_id,
            "label": ex.label,
            "margin_hyperbolic": ex.margin_hyperbolic,
            "margin_euclidean": ex.margin_euclidean,
        }
        for s, ex in zip(train_scenarios, examples)
    ]
    _write(
        out_dir / "gate_labels.jsonl",
        "\n".join(json.dumps(row, sort_keys=True) for row in audit) + "\n",
    )
    print(
        f"trained gate on {len(examples)} examples "
        f"(loss {model.metadata['initial_loss']:.4f} -> {model.metadata['final_loss']:.4f}); "
        f"weights at {out_dir / 'gate_weights.json'}"
    )
    return 0


def _component_rows(evaluations: dict) -> list[dict]:
    layout = [
        ("neither", "native"),
        ("temporal_only", "euclidean"),
        ("spatial_only", "structural"),
        ("spatio_temporal", "blended"),
    ]
    rows = []
    for component, scorer in layout:
        if scorer in evaluations:
            ev = evaluations[scorer]
            rows.append(
                {
                    "component": component,
                    "model": scorer,
                    "win_rate": ev.win_rate,
                    "mean_margin": ev.mean_margin,
                }
            )
    return rows


def _reinject(scenarios: list[Scenario], protocol: str) -> list[Scenario]:
    out = []
    for s in scenarios:
        seed = int(hashlib.sha256(s.scenario_id.encode()).hexdigest()[:8], 16)
        out.append(inject_attack(s, protocol, seed=seed))
    return out


def cmd_eval(cfg: RunConfig, out_dir: Path) -> int:
    scenarios = _read_scenarios(out_dir / "scenarios_eval.jsonl")
    protocol = cfg.benchmark.protocol
    if any(s.protocol != protocol for s in scenarios):
        scenarios = _reinject(scenarios, protocol)
    gate = None
    if "blended" in cfg.scorers:
        gate_path = out_dir / "gate_weights.json"
        if not gate_path.exists():
            raise FileNotFoundError(
                f"gate weights not found at {gate_path}; run `train` or drop the blended scorer"
            )
        gate = GateModel.load(gate_path)
    scorers = build_scorers(
        cfg.scorers,
        gate=gate,
        temporal_cfg=cfg.temporal,
        euclidean_cfg=cfg.euclidean,
        hyperbolic_cfg=cfg.hyperbolic,
        feature_mask=cfg.benchmark.feature_mask,
    )
    evaluations = {s.name: evaluate(s, scenarios) for s in scorers}

    csv_path = out_dir / "eval_per_scenario.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "regime", "split", "scorer", "margin", "win"])
        for name, ev in evaluations.items():
            for r in ev.results:
                writer.writerow(
                    [r.scenario_id, r.regime, r.split, name, repr(r.margin), int(r.win)]
                )

    summary = {name: ev.summary() for name, ev in evaluations.items()}
    if "native" in evaluations:
        for name, ev in evaluations.items():
            if name != "native":
                summary[name]["sign_test_vs_native"] = sign_test_vs(
                    evaluations["native"], ev
                )
    if gate is not None:
        cache = EmbeddingCache(cfg.hyperbolic)
        euc = EuclideanScorer(cfg.temporal, cfg.euclidean)
        hyp = HyperbolicScorer(cfg.temporal, cfg.hyperbolic, cache)
        examples = build_gate_examples(scenarios, euc, hyp)
        predictions = [
            (gate_forward(gate, ex.features), ex.label) for ex in examples
        ]
        summary["gate_diagnostics"] = gate_diagnostics(predictions)
    summary["component_decomposition"] = _component_rows(evaluations)
    _write(out_dir / "eval_summary.json", json.dumps(summary, indent=2, sort_keys=True))
    for name, ev in evaluations.items():
        print(
            f"{name}: win rate {100 * ev.win_rate:.1f}%  mean margin {ev.mean_margin:+.3f}"
            + (f"  ({len(ev.failed_scenarios)} failed)" if ev.failed_scenarios else "")
        )
    print(f"reports at {csv_path} and {out_dir / 'eval_summary.json'}")
    return 0


def cmd_cascade(cfg: RunConfig, out_dir: Path) -> int:
    path = out_dir / "cascade_criticality.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["b", "p", "slope", "classification", "analytic_threshold"])
        for b in cfg.cascade.branching:
            report = criticality_report(
                b,
                cfg.cascade.p_grid,
                cfg.cascade.depth,
                cfg.cascade.trials,
                cfg.cascade.seed,
            )
            for row in report.rows:
                writer.writerow(
                    [b, row.p, repr(row.slope), row.classification, repr(row.analytic_threshold)]
                )
            print(
                f"b={b}: empirical threshold {report.empirical_threshold} "
                f"vs analytic {report.analytic_threshold:.4f}"
            )
    print(f"criticality table at {path}")
    return 0


def cmd_bench(cfg: RunConfig, out_dir: Path) -> int:
    scenarios = _read_scenarios(out_dir / "scenarios_eval.jsonl")[:10]
    gate_path = out_dir / "gate_weights.json"
    gate = GateModel.load(gate_path) if gate_path.exists() else None
    names = [n for n in cfg.scorers if n != "blended" or gate is not None]
    scorers = build_scorers(
        names,
        gate=gate,
        temporal_cfg=cfg.temporal,
        euclidean_cfg=cfg.euclidean,
        hyperbolic_cfg=cfg.hyperbolic,
    )
    rows = []
    for scorer in scorers:
        # Warm pass populates the embedding cache before timing.
        for s in scenarios:
            scorer.score_route(s.snapshot, s.attacked_route, s.all_events(), s.snapshot.timestamp)
        timings = []
        calls = 0
        while calls < cfg.bench_calls:
            s = scenarios[calls % len(scenarios)]
            start = time.perf_counter()
            scorer.score_route(
                s.snapshot, s.attacked_route, s.all_events(), s.snapshot.timestamp
            )
            timings.append((time.perf_counter() - start) * 1e6)
            calls += 1
        timings.sort()
        rows.append(
            {
                "scorer": scorer.name,
                "calls": calls,
                "mean_us": statistics.fmean(timings),
                "median_us": statistics.median(timings),
                "p95_us": timings[int(0.95 * (len(timings) - 1))],
            }
        )
    path = out_dir / "bench_latency.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["scorer", "calls", "mean_us", "median_us", "p95_us"])
        writer.writeheader()
        writer.writerows(rows)
    for row in rows:
        print(
            f"{row['scorer']}: mean {row['mean_us']:.1f} us  median {row['median_us']:.1f} us  "
            f"p95 {row['p95_us']:.1f} us"
        )
    print(f"latency table at {path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="routerisk", description=__doc__)
    parser.add_argument("--config", help="JSON config file (defaults apply if omitted)")
    parser.add_argument(
        "--out", default="runs", help="output directory for scenario and report files"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", help="generate regime and family scenario files")
    sub.add_parser("train", help="train gate weights on the train split")
    ev = sub.add_parser("eval", help="evaluate configured scorers on the eval split")
    ev.add_argument(
        "--scorers", help="comma-separated scorer list overriding the config", default=None
    )
    ev.add_argument(
        "--protocol", help="attack protocol override for scenario generation", default=None
    )
    sub.add_parser("cascade", help="emit the cascade criticality table")
    sub.add_parser("bench", help="micro-benchmark scorer latency")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config(args)
        if getattr(args, "scorers", None):
            cfg = RunConfig.from_dict(
                {**cfg.to_dict(), "scorers": args.scorers.split(",")}
            )
        if getattr(args, "protocol", None):
            benchmark = {**cfg.to_dict()["benchmark"], "protocol": args.protocol}
            cfg = RunConfig.from_dict({**cfg.to_dict(), "benchmark": benchmark})
        out_dir = Path(args.out)
        command = {
            "gen": cmd_gen,
            "train": cmd_train,
            "eval": cmd_eval,
            "cascade": cmd_cascade,
            "bench": cmd_bench,
        }[args.command]
        return command(cfg, out_dir)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
