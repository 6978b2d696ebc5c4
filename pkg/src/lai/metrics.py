"""Detection and forecasting metrics: point-adjusted F1 and MAE."""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np


def _binary(x, name):
    arr = np.asarray(x)
    if arr.dtype == bool:
        return arr.astype(np.int8)
    out = arr.astype(np.int8)
    if not np.array_equal(out, arr) or not np.all((out == 0) | (out == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    return out


def point_adjust(flags, labels):
    """Segment-level credit assignment for detections.

    Every maximal run of 1s in ``labels`` that contains at least one
    flagged point has all of its flags set to 1.  Flags outside labeled
    runs are untouched.  Idempotent.
    """
    flags = _binary(flags, "flags")
    labels = _binary(labels, "labels")
    if flags.shape != labels.shape:
        raise ValueError("flags and labels must have equal length")
    adjusted = flags.copy()
    T = labels.size
    t = 0
    while t < T:
        if labels[t] == 1:
            end = t
            while end < T and labels[end] == 1:
                end += 1
            if adjusted[t:end].any():
                adjusted[t:end] = 1
            t = end
        else:
            t += 1
    return adjusted


def _prf(flags, labels):
    tp = int(np.sum((flags == 1) & (labels == 1)))
    fp = int(np.sum((flags == 1) & (labels == 0)))
    fn = int(np.sum((flags == 0) & (labels == 1)))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1


def adjusted_f1(scores, labels, threshold):
    """Precision, recall, and F1 after point adjustment at one threshold.

    Flags are ``scores > threshold``; 0/0 ratios are defined as 0.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _binary(labels, "labels")
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    flags = (scores > threshold).astype(np.int8)
    return _prf(point_adjust(flags, labels), labels)


@dataclass(frozen=True)
class SeriesMetrics:
    """Per-series entry of a report."""

    name: str
    best_f1: float
    best_threshold: float
    precision: float
    recall: float
    mae: Optional[float] = None


@dataclass(frozen=True)
class MetricReport:
    """Headline metrics plus the per-series breakdown they aggregate."""

    best_f1: float
    best_threshold: float
    precision: float
    recall: float
    mae: Optional[float] = None
    per_series: Tuple[SeriesMetrics, ...] = ()


def best_f1_sweep(scores, labels, name: str = "series") -> MetricReport:
    """Best adjusted F1 over every distinct score used as threshold.

    +inf is included as a candidate (flag nothing); ties break toward the
    higher threshold.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _binary(labels, "labels")
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    candidates = np.unique(scores).tolist() + [np.inf]
    best = None
    for threshold in candidates:
        precision, recall, f1 = adjusted_f1(scores, labels, threshold)
        if best is None or f1 > best[0] or (f1 == best[0] and threshold > best[1]):
            best = (f1, threshold, precision, recall)
    f1, threshold, precision, recall = best
    entry = SeriesMetrics(name, f1, threshold, precision, recall)
    return MetricReport(f1, threshold, precision, recall, per_series=(entry,))


def mae(predictions, actuals) -> float:
    """Mean absolute error between two equal-length sequences."""
    predictions = np.asarray(predictions, dtype=np.float64)
    actuals = np.asarray(actuals, dtype=np.float64)
    if predictions.shape != actuals.shape:
        raise ValueError("predictions and actuals must have equal length")
    if predictions.size == 0:
        raise ValueError("cannot average an empty sequence")
    return float(np.mean(np.abs(predictions - actuals)))


def combine_reports(reports: Sequence[MetricReport]) -> MetricReport:
    """Unweighted mean of per-series metrics across several reports.

    The headline threshold is reported as NaN when it differs across
    series (each series is swept independently).
    """
    if not reports:
        raise ValueError("no reports to combine")
    entries = tuple(e for r in reports for e in r.per_series)
    maes = [r.mae for r in reports if r.mae is not None]
    thresholds = {r.best_threshold for r in reports}
    return MetricReport(
        best_f1=float(np.mean([r.best_f1 for r in reports])),
        best_threshold=thresholds.pop() if len(thresholds) == 1 else float("nan"),
        precision=float(np.mean([r.precision for r in reports])),
        recall=float(np.mean([r.recall for r in reports])),
        mae=float(np.mean(maes)) if maes else None,
        per_series=entries,
    )
