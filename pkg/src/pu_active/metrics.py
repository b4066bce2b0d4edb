"""Retrieval metrics, F1 gain and multi-seed aggregation."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy import stats

from .data import Label


@dataclass(frozen=True)
class MetricsRecord:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class AggregateRecord:
    strategy: str
    mean_gain: float
    std_gain: float
    n_seeds: int

    def table_cell(self, digits: int = 2) -> str:
        return f"{self.mean_gain:.{digits}f}±{self.std_gain:.{digits}f}"


def compute_metrics(predictions, truth) -> MetricsRecord:
    """Confusion counts and precision/recall/F1 with targets as the positive
    class. Each ratio is 0 when its denominator is 0."""
    pred = np.asarray(predictions, dtype=int).ravel()
    true = np.asarray(truth, dtype=int).ravel()
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {true.size} labels")
    if pred.size == 0:
        raise ValueError("cannot score an empty prediction set")
    pp = pred == Label.POSITIVE
    tp_mask = true == Label.POSITIVE
    tp = int(np.sum(pp & tp_mask))
    fp = int(np.sum(pp & ~tp_mask))
    fn = int(np.sum(~pp & tp_mask))
    tn = int(np.sum(~pp & ~tp_mask))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricsRecord(tp, fp, fn, tn, precision, recall, f1)


def gain(trace, baseline: MetricsRecord) -> float:
    """Final-round F1 minus baseline F1, in percentage points."""
    trace = list(trace)
    if not trace:
        raise ValueError("gain needs at least one round")
    return (trace[-1].metrics.f1 - baseline.f1) * 100.0


def aggregate_runs(gains, strategy) -> AggregateRecord:
    g = np.asarray(list(gains), dtype=float)
    if g.size < 2:
        raise ValueError("need at least two runs to report a deviation")
    name = getattr(strategy, "value", str(strategy))
    return AggregateRecord(name, float(g.mean()), float(g.std(ddof=1)), int(g.size))


def sign_test(better, worse) -> float:
    """One-sided sign test p-value for ``better > worse`` on paired runs.

    Ties are dropped.
    """
    diff = np.asarray(better, dtype=float) - np.asarray(worse, dtype=float)
    wins = int(np.sum(diff > 0))
    n = int(np.sum(diff != 0))
    if n == 0:
        return 1.0
    return float(stats.binomtest(wins, n, 0.5, alternative="greater").pvalue)
