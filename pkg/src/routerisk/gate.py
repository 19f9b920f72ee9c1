"""Structural feature map, the 9->12->1 geometry gate, training, diagnostics.

The gate reads nine structural features of (snapshot, route) and outputs the
probability that the hyperbolic scorer separates safe from attacked routes
better than the Euclidean one. Blending is a soft mixture of the two scores.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import (
    GraphSnapshot,
    Route,
    RouteScore,
    bfs_shells,
    cycle_rank_norm,
    reciprocal_ratio,
    route_subgraph,
    shell_growth_slope,
    triangle_density,
    validate_route,
)
from .hyperbolic import CURVATURE_MAX, CURVATURE_MIN
from .stats import rank_auc

FEATURE_NAMES = (
    "edge_surplus",
    "reciprocal",
    "triangle",
    "route_crosslink",
    "route_load_mean",
    "route_length_norm",
    "shell_growth",
    "cycle_rank",
    "curvature_norm",
)
N_FEATURES = 9
HIDDEN_UNITS = 12
GATE_FILE_VERSION = 1


class CorruptModelError(ValueError):
    """Raised when gate parameters are non-finite or mis-shaped."""


class SingleClassWarning(UserWarning):
    """Training data contains a single label class."""


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def extract_features(g: GraphSnapshot, r: Route, kappa: float) -> np.ndarray:
    """Nine structural features of (snapshot, route), each clamped to [0, 1].

    ``kappa`` is the fitted Poincare curvature for the snapshot (see
    hyperbolic.fit_curvature); it is normalized against the search bracket.
    """
    validate_route(g, r)
    n = g.n_nodes
    sub = route_subgraph(g, r)
    n_route = len(r)

    edge_surplus = _clamp01((len(g.edges) - (n - 1)) / n)
    crosslink = _clamp01(max(0, len(sub.edges) - (n_route - 1)) / n_route)
    load_mean = sum(g.node_load[v] for v in r.node_sequence) / n_route
    _, phi7 = shell_growth_slope(bfs_shells(g))
    curvature_norm = _clamp01((kappa - CURVATURE_MIN) / (CURVATURE_MAX - CURVATURE_MIN))

    return np.array(
        [
            edge_surplus,
            reciprocal_ratio(g),
            triangle_density(g),
            crosslink,
            _clamp01(load_mean),
            _clamp01(n_route / n),
            phi7,
            cycle_rank_norm(g),
            curvature_norm,
        ]
    )


@dataclass
class GateModel:
    """Weights of the 9->12->1 selector plus training metadata."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.W1 = np.asarray(self.W1, dtype=float)
        self.b1 = np.asarray(self.b1, dtype=float)
        self.W2 = np.asarray(self.W2, dtype=float)
        self.b2 = float(self.b2)
        if self.W1.shape != (HIDDEN_UNITS, N_FEATURES):
            raise CorruptModelError(f"W1 shape {self.W1.shape}")
        if self.b1.shape != (HIDDEN_UNITS,):
            raise CorruptModelError(f"b1 shape {self.b1.shape}")
        if self.W2.shape != (1, HIDDEN_UNITS):
            raise CorruptModelError(f"W2 shape {self.W2.shape}")

    @property
    def n_parameters(self) -> int:
        return self.W1.size + self.b1.size + self.W2.size + 1

    @property
    def dims(self) -> list[int]:
        return [N_FEATURES, HIDDEN_UNITS, 1]

    def to_dict(self) -> dict:
        return {
            "version": GATE_FILE_VERSION,
            "dims": self.dims,
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GateModel":
        if data.get("dims") != [N_FEATURES, HIDDEN_UNITS, 1]:
            raise CorruptModelError(f"unsupported dims {data.get('dims')}")
        return cls(
            W1=np.array(data["W1"], dtype=float),
            b1=np.array(data["b1"], dtype=float),
            W2=np.array(data["W2"], dtype=float),
            b2=float(data["b2"]),
            metadata=data.get("metadata", {}),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "GateModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class GateExample:
    """One training example: features, label, and the margins behind the label."""

    features: np.ndarray
    label: int
    margin_hyperbolic: float
    margin_euclidean: float

    @classmethod
    def from_margins(
        cls, features: np.ndarray, margin_hyperbolic: float, margin_euclidean: float
    ) -> "GateExample":
        # Label rule: Y = 1 iff the hyperbolic margin is >= the Euclidean one.
        return cls(
            features=np.asarray(features, dtype=float),
            label=int(margin_hyperbolic >= margin_euclidean),
            margin_hyperbolic=margin_hyperbolic,
            margin_euclidean=margin_euclidean,
        )


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))


def gate_forward(model: GateModel, features: np.ndarray) -> float:
    """pi = sigmoid(W2 relu(W1 phi + b1) + b2), in (0, 1)."""
    phi = np.asarray(features, dtype=float)
    for arr in (model.W1, model.b1, model.W2):
        if not np.all(np.isfinite(arr)):
            raise CorruptModelError("non-finite gate parameters")
    if not math.isfinite(model.b2):
        raise CorruptModelError("non-finite gate parameters")
    hidden = np.maximum(0.0, model.W1 @ phi + model.b1)
    return float(_sigmoid(model.W2 @ hidden + model.b2)[0])


def apply_feature_mask(features: np.ndarray, mask: Sequence[int]) -> np.ndarray:
    """Zero masked feature columns (ablation); mask has one bit per feature."""
    mask = np.asarray(mask, dtype=float)
    if mask.shape != (N_FEATURES,):
        raise ValueError(f"feature mask must have {N_FEATURES} entries")
    return np.asarray(features, dtype=float) * mask


def bce_loss_and_gradients(
    model: GateModel, X: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray, float]:
    """Binary cross-entropy over a batch with analytic backprop gradients."""
    pre = X @ model.W1.T + model.b1  # (batch, hidden)
    hidden = np.maximum(0.0, pre)
    z = hidden @ model.W2.T[:, 0] + model.b2  # (batch,)
    p = np.clip(_sigmoid(z), 1e-12, 1.0 - 1e-12)
    loss = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))

    dz = (p - y) / len(y)  # (batch,)
    dW2 = (dz @ hidden)[None, :]
    db2 = float(dz.sum())
    dhidden = np.outer(dz, model.W2[0])
    dpre = dhidden * (pre > 0)
    dW1 = dpre.T @ X
    db1 = dpre.sum(axis=0)
    return loss, dW1, db1, dW2, db2


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.05
    epochs: int = 300
    batch_size: int = 32
    seed: int = 0


def train_gate(
    dataset: Sequence[GateExample], hyper: TrainingConfig = TrainingConfig()
) -> GateModel:
    """Train the gate with He initialization and mini-batch gradient descent.

    Deterministic given (dataset order, seed, hyperparameters). A single-class
    dataset raises SingleClassWarning but training proceeds.
    """
    if not dataset:
        raise ValueError("training dataset is empty")
    X = np.stack([ex.features for ex in dataset])
    y = np.array([ex.label for ex in dataset], dtype=float)
    if len(set(int(v) for v in y)) < 2:
        warnings.warn("gate training data has a single class", SingleClassWarning)

    rng = np.random.default_rng(hyper.seed)
    model = GateModel(
        W1=rng.normal(scale=math.sqrt(2.0 / N_FEATURES), size=(HIDDEN_UNITS, N_FEATURES)),
        b1=np.zeros(HIDDEN_UNITS),
        W2=rng.normal(scale=math.sqrt(2.0 / HIDDEN_UNITS), size=(1, HIDDEN_UNITS)),
        b2=0.0,
    )
    initial_loss, *_ = bce_loss_and_gradients(model, X, y)
    curve = [initial_loss]
    n = len(dataset)
    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            batch = order[start : start + hyper.batch_size]
            _, dW1, db1, dW2, db2 = bce_loss_and_gradients(model, X[batch], y[batch])
            model.W1 -= hyper.learning_rate * dW1
            model.b1 -= hyper.learning_rate * db1
            model.W2 -= hyper.learning_rate * dW2
            model.b2 -= hyper.learning_rate * db2
        epoch_loss, *_ = bce_loss_and_gradients(model, X, y)
        curve.append(epoch_loss)
    model.metadata = {
        "seed": hyper.seed,
        "epochs": hyper.epochs,
        "learning_rate": hyper.learning_rate,
        "batch_size": hyper.batch_size,
        "n_examples": n,
        "initial_loss": curve[0],
        "final_loss": curve[-1],
        "loss_curve": curve,
    }
    return model


def blend(pi: float, r_hyp: RouteScore, r_euc: RouteScore) -> RouteScore:
    """Soft mixture R = pi * R_hyp + (1 - pi) * R_euc."""
    if not (0.0 <= pi <= 1.0):
        raise ValueError(f"pi = {pi} outside [0, 1]")
    score = pi * r_hyp.score + (1.0 - pi) * r_euc.score
    return RouteScore(
        route=r_hyp.route,
        score=score,
        terms={"pi": pi, "hyperbolic": r_hyp.score, "euclidean": r_euc.score},
    )


def gate_diagnostics(predictions: Sequence[tuple[float, int]]) -> dict:
    """Held-out gate quality: AUC, accuracy, ECE, confusion, entropy bands.

    Threshold 0.5 with ties predicted as class 1. ECE uses 10 equal-width
    confidence bins (confidence = max(pi, 1 - pi), accuracy = correctness).
    Entropy bands: low-entropy pi outside [0.2, 0.8], high-entropy pi in
    [0.45, 0.55], mid the remainder.
    """
    if not predictions:
        raise ValueError("no predictions")
    pis = np.array([p for p, _ in predictions], dtype=float)
    ys = np.array([y for _, y in predictions], dtype=int)
    preds = (pis >= 0.5).astype(int)

    single_class = len(set(ys.tolist())) < 2
    auc = None if single_class else rank_auc(pis, ys)

    accuracy = float((preds == ys).mean())
    tp = int(((preds == 1) & (ys == 1)).sum())
    tn = int(((preds == 0) & (ys == 0)).sum())
    fp = int(((preds == 1) & (ys == 0)).sum())
    fn = int(((preds == 0) & (ys == 1)).sum())

    conf = np.maximum(pis, 1.0 - pis)
    correct = (preds == ys).astype(float)
    ece = 0.0
    for b in range(10):
        lo, hi = b / 10.0, (b + 1) / 10.0
        in_bin = (conf >= lo) & (conf < hi) if b < 9 else (conf >= lo) & (conf <= hi)
        if in_bin.any():
            ece += in_bin.mean() * abs(conf[in_bin].mean() - correct[in_bin].mean())

    low = float(((pis < 0.2) | (pis > 0.8)).mean())
    high = float(((pis >= 0.45) & (pis <= 0.55)).mean())
    return {
        "auc": auc,
        "auc_defined": not single_class,
        "accuracy": accuracy,
        "ece": float(ece),
        "confusion": {"tp": tp, "tn": tn, "fp": fp, "fn": fn},
        "entropy_bands": {"low": low, "mid": float(1.0 - low - high), "high": high},
        "n": len(predictions),
    }
