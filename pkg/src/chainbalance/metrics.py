"""Imbalance-aware evaluation: point metrics, ranking metrics, thresholds.

All metric functions return None where a required denominator is zero, and
aggregation skips undefined values while reporting how many were skipped.
Binary predictions use the rule score >= threshold, with the threshold picked
per label from a fixed 21-point grid to maximize the chosen point metric on
training scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AllUndefined, LengthMismatch

THRESHOLD_GRID: tuple[float, ...] = tuple(i / 20 for i in range(21))

F_MEASURE = "F"
G_MEAN = "G"
BALANCED_ACCURACY = "B"
POINT_METRICS = (F_MEASURE, G_MEAN, BALANCED_ACCURACY)

_OBJECTIVE_ALIASES = {
    "f": F_MEASURE,
    "f-measure": F_MEASURE,
    "f1": F_MEASURE,
    "g": G_MEAN,
    "g-mean": G_MEAN,
    "gmean": G_MEAN,
    "b": BALANCED_ACCURACY,
    "balanced-accuracy": BALANCED_ACCURACY,
    "balancedaccuracy": BALANCED_ACCURACY,
    "bal-acc": BALANCED_ACCURACY,
}

# Report keys for the five metrics, in presentation order.
METRIC_KEYS = ("f_measure", "g_mean", "balanced_accuracy", "auc_roc", "auc_pr")

IMR_BUCKETS: tuple[tuple[float, float], ...] = (
    (1.0, 5.0),
    (5.0, 10.0),
    (10.0, 15.0),
    (15.0, 25.0),
    (25.0, 50.0),
    (50.0, 100.0),
    (100.0, math.inf),
)


def normalize_objective(name: str) -> str:
    key = name.strip().lower()
    if key in _OBJECTIVE_ALIASES:
        return _OBJECTIVE_ALIASES[key]
    raise ValueError(f"unknown point metric {name!r}")


@dataclass(frozen=True)
class BinaryConfusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def from_predictions(cls, truth: np.ndarray, pred: np.ndarray) -> "BinaryConfusion":
        truth = np.asarray(truth).astype(bool)
        pred = np.asarray(pred).astype(bool)
        if truth.shape != pred.shape:
            raise LengthMismatch("truth and predictions differ in length")
        return cls(
            tp=int((truth & pred).sum()),
            fp=int((~truth & pred).sum()),
            tn=int((~truth & ~pred).sum()),
            fn=int((truth & ~pred).sum()),
        )


def point_metric(conf: BinaryConfusion, kind: str) -> float | None:
    """F-measure, G-mean, or balanced accuracy from a confusion matrix.

    Returns None when a needed rate is undefined: F needs at least one of
    tp/fp/fn, G and B need both a positive and a negative example. An F of
    zero (tp=0 with errors present) is a defined value, not None.
    """
    kind = normalize_objective(kind)
    if kind == F_MEASURE:
        denom = 2 * conf.tp + conf.fp + conf.fn
        return None if denom == 0 else 2 * conf.tp / denom
    tpr = conf.tp / (conf.tp + conf.fn) if conf.tp + conf.fn > 0 else None
    tnr = conf.tn / (conf.tn + conf.fp) if conf.tn + conf.fp > 0 else None
    if tpr is None or tnr is None:
        return None
    if kind == G_MEAN:
        return math.sqrt(tpr * tnr)
    return (tpr + tnr) / 2


def _check_pair(scores: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    truth = np.asarray(truth).astype(np.int8).ravel()
    if scores.shape[0] != truth.shape[0]:
        raise LengthMismatch("scores and truth differ in length")
    return scores, truth


def auc_roc(scores: np.ndarray, truth: np.ndarray) -> float | None:
    """Probability a random positive outscores a random negative.

    Computed as the normalized rank-sum statistic; tied pairs count half.
    None when either class is absent.
    """
    scores, truth = _check_pair(scores, truth)
    pos = int(truth.sum())
    neg = truth.shape[0] - pos
    if pos == 0 or neg == 0:
        return None
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    starts = np.cumsum(counts) - counts + 1
    avg_ranks = starts + (counts - 1) / 2.0
    ranks = avg_ranks[inverse]
    rank_sum = float(ranks[truth == 1].sum())
    u = rank_sum - pos * (pos + 1) / 2.0
    return u / (pos * neg)


def auc_pr(scores: np.ndarray, truth: np.ndarray) -> float | None:
    """Average precision over descending score blocks.

    Tied scores form one block evaluated at the block end. None when there
    are no positives.
    """
    scores, truth = _check_pair(scores, truth)
    pos = int(truth.sum())
    if pos == 0:
        return None
    values, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    pos_per_value = np.bincount(inverse, weights=truth, minlength=values.shape[0])
    # Descending score order.
    block_pos = pos_per_value[::-1]
    block_n = counts[::-1].astype(np.float64)
    cum_tp = np.cumsum(block_pos)
    cum_n = np.cumsum(block_n)
    precision = cum_tp / cum_n
    recall_gain = block_pos / pos
    return float((recall_gain * precision).sum())


@dataclass(frozen=True)
class ThresholdPolicy:
    """Grid of candidate thresholds and the point metric to maximize."""

    objective: str
    grid: tuple[float, ...] = THRESHOLD_GRID

    def __post_init__(self) -> None:
        object.__setattr__(self, "objective", normalize_objective(self.objective))
        if len(self.grid) < 2 or self.grid[0] != 0.0 or self.grid[-1] != 1.0:
            raise ValueError("grid must run from 0 to 1")
        if any(a >= b for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")


@dataclass(frozen=True)
class ThresholdChoice:
    threshold: float
    value: float | None
    fallback: bool


def select_threshold(
    train_scores: np.ndarray, train_truth: np.ndarray, policy: ThresholdPolicy
) -> ThresholdChoice:
    """Scan the grid and return the smallest threshold maximizing the objective.

    Prediction rule is score >= t. Falls back to 0.5 (flagged) when the
    training column has no positives, or when the objective is undefined at
    every grid point.
    """
    scores, truth = _check_pair(train_scores, train_truth)
    if int(truth.sum()) == 0:
        return ThresholdChoice(threshold=0.5, value=None, fallback=True)
    best_t: float | None = None
    best_v = -1.0
    for t in policy.grid:
        conf = BinaryConfusion.from_predictions(truth, scores >= t)
        value = point_metric(conf, policy.objective)
        if value is not None and value > best_v:
            best_t, best_v = t, value
    if best_t is None:
        return ThresholdChoice(threshold=0.5, value=None, fallback=True)
    return ThresholdChoice(threshold=best_t, value=best_v, fallback=False)


def macro_average(values: list[float | None]) -> float:
    """Mean over the defined entries; raises when every entry is undefined."""
    defined = [v for v in values if v is not None]
    if not defined:
        raise AllUndefined("no defined values to average")
    return float(np.mean(defined))


def average_ranks(results: np.ndarray, higher_is_better: bool = True) -> np.ndarray:
    """Mean rank of each method across datasets (rank 1 = best, ties mid-ranked).

    results is a methods x datasets matrix with no missing cells.
    """
    results = np.asarray(results, dtype=np.float64)
    if results.ndim != 2:
        raise ValueError("results must be a methods x datasets matrix")
    if np.isnan(results).any():
        raise ValueError("results must not contain missing cells")
    n_methods, n_datasets = results.shape
    ranks = np.empty_like(results)
    for col in range(n_datasets):
        values = results[:, col]
        key = -values if higher_is_better else values
        order = np.argsort(key, kind="mergesort")
        sorted_key = key[order]
        col_ranks = np.empty(n_methods, dtype=np.float64)
        i = 0
        while i < n_methods:
            j = i
            while j + 1 < n_methods and sorted_key[j + 1] == sorted_key[i]:
                j += 1
            col_ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
            i = j + 1
        ranks[:, col] = col_ranks
    return ranks.mean(axis=1)


@dataclass(frozen=True)
class ImrBucket:
    lower: float
    upper: float
    label_count: int
    label_percent: float
    mean_value: float | None


def imr_bucket_report(
    imrs: list[float], values: list[float | None]
) -> list[ImrBucket]:
    """Aggregate a per-label metric into the seven half-open ImR intervals."""
    if len(imrs) != len(values):
        raise LengthMismatch("imrs and values differ in length")
    total = len(imrs)
    report = []
    for lower, upper in IMR_BUCKETS:
        members = [v for r, v in zip(imrs, values) if lower <= r < upper]
        defined = [v for v in members if v is not None]
        report.append(
            ImrBucket(
                lower=lower,
                upper=upper,
                label_count=len(members),
                label_percent=100.0 * len(members) / total if total else 0.0,
                mean_value=float(np.mean(defined)) if defined else None,
            )
        )
    return report


# ---------------------------------------------------------------------------
# Per-model evaluation reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabelMetrics:
    label_index: int
    f_measure: float | None
    g_mean: float | None
    balanced_accuracy: float | None
    auc_roc: float | None
    auc_pr: float | None
    threshold_f: float
    threshold_g: float
    threshold_b: float
    threshold_fallback: bool


@dataclass(frozen=True)
class MetricReport:
    """Per-label metric values plus macro averages over defined labels."""

    per_label: tuple[LabelMetrics, ...]
    macro: dict[str, float | None]
    excluded: dict[str, int]
    skipped_label_count: int


def build_report(
    train_scores: np.ndarray,
    train_truth: np.ndarray,
    test_scores: np.ndarray,
    test_truth: np.ndarray,
    skipped_label_count: int = 0,
) -> MetricReport:
    """Select per-label thresholds on training scores and evaluate on test.

    Each point metric gets its own threshold. The ranking metrics use the raw
    test scores. Matrices are instances x labels.
    """
    train_scores = np.asarray(train_scores, dtype=np.float64)
    test_scores = np.asarray(test_scores, dtype=np.float64)
    train_truth = np.asarray(train_truth, dtype=np.int8)
    test_truth = np.asarray(test_truth, dtype=np.int8)
    if train_scores.shape != train_truth.shape or test_scores.shape != test_truth.shape:
        raise LengthMismatch("scores and truth matrices differ in shape")
    if train_scores.shape[1] != test_scores.shape[1]:
        raise LengthMismatch("train and test disagree on label count")

    rows = []
    for j in range(train_scores.shape[1]):
        tr_s, tr_t = train_scores[:, j], train_truth[:, j]
        te_s, te_t = test_scores[:, j], test_truth[:, j]
        choices = {
            kind: select_threshold(tr_s, tr_t, ThresholdPolicy(objective=kind))
            for kind in POINT_METRICS
        }
        point_values = {}
        for kind in POINT_METRICS:
            conf = BinaryConfusion.from_predictions(te_t, te_s >= choices[kind].threshold)
            point_values[kind] = point_metric(conf, kind)
        rows.append(
            LabelMetrics(
                label_index=j,
                f_measure=point_values[F_MEASURE],
                g_mean=point_values[G_MEAN],
                balanced_accuracy=point_values[BALANCED_ACCURACY],
                auc_roc=auc_roc(te_s, te_t),
                auc_pr=auc_pr(te_s, te_t),
                threshold_f=choices[F_MEASURE].threshold,
                threshold_g=choices[G_MEAN].threshold,
                threshold_b=choices[BALANCED_ACCURACY].threshold,
                threshold_fallback=any(c.fallback for c in choices.values()),
            )
        )

    macro: dict[str, float | None] = {}
    excluded: dict[str, int] = {}
    for key in METRIC_KEYS:
        values = [getattr(row, key) for row in rows]
        defined = [v for v in values if v is not None]
        excluded[key] = len(values) - len(defined)
        macro[key] = float(np.mean(defined)) if defined else None
    return MetricReport(
        per_label=tuple(rows),
        macro=macro,
        excluded=excluded,
        skipped_label_count=skipped_label_count,
    )


def report_to_dict(report: MetricReport) -> dict:
    return {
        "macro": report.macro,
        "excluded": report.excluded,
        "skipped_label_count": report.skipped_label_count,
        "per_label": [
            {
                "label_index": row.label_index,
                "f_measure": row.f_measure,
                "g_mean": row.g_mean,
                "balanced_accuracy": row.balanced_accuracy,
                "auc_roc": row.auc_roc,
                "auc_pr": row.auc_pr,
                "threshold_f": row.threshold_f,
                "threshold_g": row.threshold_g,
                "threshold_b": row.threshold_b,
                "threshold_fallback": row.threshold_fallback,
            }
            for row in report.per_label
        ],
    }


def report_to_csv_rows(report: MetricReport) -> list[tuple[int, str, float | None]]:
    """Flat (label_index, metric, value) rows, one per label per metric."""
    rows = []
    for row in report.per_label:
        for key in METRIC_KEYS:
            rows.append((row.label_index, key, getattr(row, key)))
    return rows
