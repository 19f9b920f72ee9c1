"""Evaluation statistics: percentile bootstrap, exact sign test, correlations."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def bootstrap_ci(
    samples: Sequence[float],
    resamples: int = 400,
    level: float = 95.0,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap CI for the mean.

    Draws ``resamples`` seeded resamples with replacement and returns the
    ((100-level)/2, (100+level)/2) percentiles of the resample means.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("bootstrap_ci requires at least one sample")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(resamples, x.size))
    means = x[idx].mean(axis=1)
    lo = (100.0 - level) / 2.0
    return float(np.percentile(means, lo)), float(np.percentile(means, 100.0 - lo))


def _log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def exact_sign_test(n_plus: int, n_minus: int) -> float:
    """Two-sided exact binomial p-value at p = 1/2 over the discordant pairs.

    Computed in log space: p = min(1, 2 * P[X <= min(n+, n-)]) for
    X ~ Bin(n+ + n-, 1/2). Zero discordant pairs give p = 1.
    """
    if n_plus < 0 or n_minus < 0:
        raise ValueError("counts must be non-negative")
    n = n_plus + n_minus
    if n == 0:
        return 1.0
    k = min(n_plus, n_minus)
    logs = [_log_binom(n, i) - n * math.log(2.0) for i in range(k + 1)]
    m = max(logs)
    log_tail = m + math.log(sum(math.exp(x - m) for x in logs))
    return min(1.0, 2.0 * math.exp(log_tail))


def midranks(x: Sequence[float]) -> np.ndarray:
    """Ranks starting at 1, ties replaced by their average rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size, dtype=float)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float((xd**2).sum()) * float((yd**2).sum()))
    if denom == 0.0:
        raise ValueError("correlation undefined for a constant series")
    return float((xd * yd).sum() / denom)


def correlations(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """(Pearson, Spearman); Spearman is Pearson on midrank-transformed data."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("series must have equal length")
    if x.size < 3:
        raise ValueError("correlations require at least 3 points")
    return pearson(x, y), pearson(midranks(x), midranks(y))


def rank_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC with tie midranks."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC requires both classes")
    ranks = midranks(scores)
    rank_sum_pos = float(ranks[labels == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
