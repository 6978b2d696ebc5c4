"""Univariate series ingestion, scaling, splitting, and contamination."""

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class CsvFormatError(ValueError):
    """Malformed series file; message names the offending row and column."""


def _as_float_array(values):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("values must be one-dimensional")
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """A univariate real-valued series with optional binary labels.

    ``values`` must be non-empty and finite; ``labels``, when present, has
    the same length with entries in {0, 1} (1 marks an anomalous point).
    """

    values: np.ndarray
    start_index: int = 0
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        values = _as_float_array(self.values)
        if values.size == 0:
            raise ValueError("series must be non-empty")
        if not np.all(np.isfinite(values)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int8)
            if labels.shape != values.shape:
                raise ValueError("labels length must match values length")
            if not np.all((labels == 0) | (labels == 1)):
                raise ValueError("labels must be 0 or 1")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ScaleParams:
    """Median / IQR normalization parameters: scaled = (x - median) / iqr_scale."""

    median: float
    iqr_scale: float

    def __post_init__(self):
        if not self.iqr_scale > 0:
            raise ValueError("iqr_scale must be strictly positive")

    def transform(self, values):
        return (np.asarray(values, dtype=np.float64) - self.median) / self.iqr_scale

    def inverse(self, values):
        return np.asarray(values, dtype=np.float64) * self.iqr_scale + self.median


@dataclass(frozen=True)
class SplitSpec:
    """Contiguous train/val/test fractions; the test split is the tail."""

    train_frac: float
    val_frac: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.train_frac < 1.0:
            raise ValueError("train_frac must be in (0, 1)")
        if not 0.0 <= self.val_frac < 1.0:
            raise ValueError("val_frac must be in [0, 1)")
        if self.train_frac + self.val_frac >= 1.0:
            raise ValueError("train_frac + val_frac must be < 1")


def load_csv(path) -> TimeSeries:
    """Load a series from a ``index,value[,label]`` CSV with a header line.

    Header names are not enforced, only the column count (2 or 3, constant
    across rows).  Raises CsvFormatError naming the data row (1-based,
    header excluded) and column on any parse failure.
    """
    indices = []
    values = []
    labels = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CsvFormatError(f"{path}: empty file")
        ncols = None
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if ncols is None:
                ncols = len(row)
                if ncols not in (2, 3):
                    raise CsvFormatError(
                        f"{path}: row {row_no}: expected 2 or 3 columns, got {ncols}"
                    )
            elif len(row) != ncols:
                raise CsvFormatError(
                    f"{path}: row {row_no}: expected {ncols} columns, got {len(row)}"
                )
            try:
                indices.append(int(row[0]))
            except ValueError:
                raise CsvFormatError(
                    f"{path}: row {row_no}, column 'index': not an integer: {row[0]!r}"
                ) from None
            try:
                v = float(row[1])
            except ValueError:
                raise CsvFormatError(
                    f"{path}: row {row_no}, column 'value': not a number: {row[1]!r}"
                ) from None
            if not math.isfinite(v):
                raise CsvFormatError(
                    f"{path}: row {row_no}, column 'value': non-finite value {row[1]!r}"
                )
            values.append(v)
            if ncols == 3:
                try:
                    lab = float(row[2])
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: row {row_no}, column 'label': not a number: {row[2]!r}"
                    ) from None
                if lab not in (0.0, 1.0):
                    raise CsvFormatError(
                        f"{path}: row {row_no}, column 'label': must be 0 or 1, got {row[2]!r}"
                    )
                labels.append(int(lab))
    if not values:
        raise CsvFormatError(f"{path}: no data rows")
    return TimeSeries(
        values=np.array(values),
        start_index=indices[0],
        labels=np.array(labels, dtype=np.int8) if labels else None,
    )


def save_csv(path, series: TimeSeries) -> None:
    """Write a series in the same ``index,value[,label]`` format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if series.labels is None:
            writer.writerow(["index", "value"])
            for i, v in enumerate(series.values):
                writer.writerow([series.start_index + i, repr(float(v))])
        else:
            writer.writerow(["index", "value", "label"])
            for i, (v, lab) in enumerate(zip(series.values, series.labels)):
                writer.writerow([series.start_index + i, repr(float(v)), int(lab)])


def robust_scale(series: TimeSeries):
    """Normalize by median and interquartile range.

    Quartiles use linearly interpolated order statistics; a zero IQR
    (constant series) falls back to a divisor of 1.0.

    Returns:
        (scaled series, ScaleParams) so the transform can be reapplied to
        held-out data and inverted.
    """
    med = float(np.median(series.values))
    q1, q3 = np.quantile(series.values, [0.25, 0.75])
    iqr = float(q3 - q1)
    params = ScaleParams(median=med, iqr_scale=iqr if iqr > 0 else 1.0)
    return (
        TimeSeries(params.transform(series.values), series.start_index, series.labels),
        params,
    )


def split(series: TimeSeries, spec: SplitSpec):
    """Split into contiguous (train, val, test) in temporal order.

    Train gets floor(train_frac * T) points, val the next
    floor(val_frac * T), test the rest.  An empty validation split is
    legal and returned as None; empty train or test is an error.
    """
    T = len(series)
    if T < 3:
        raise ValueError("series too short to split")
    n_train = int(math.floor(spec.train_frac * T))
    n_val = int(math.floor(spec.val_frac * T))
    n_test = T - n_train - n_val
    if n_train == 0:
        raise ValueError("empty train split")
    if n_test <= 0:
        raise ValueError("empty test split")

    def piece(lo, hi):
        return TimeSeries(
            series.values[lo:hi],
            series.start_index + lo,
            None if series.labels is None else series.labels[lo:hi],
        )

    train = piece(0, n_train)
    val = piece(n_train, n_train + n_val) if n_val > 0 else None
    test = piece(n_train + n_val, T)
    return train, val, test


def subsample(series: TimeSeries, factor: int) -> TimeSeries:
    """Keep every ``factor``-th point starting at the first one."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    return TimeSeries(
        series.values[::factor],
        series.start_index,
        None if series.labels is None else series.labels[::factor],
    )


def generate_sinusoid(length, period, amplitude=1.0, noise_std=0.0, seed=0) -> TimeSeries:
    """Seeded sinusoid with additive Gaussian noise and all-zero labels."""
    if length < 1:
        raise ValueError("length must be >= 1")
    if not period > 0:
        raise ValueError("period must be > 0")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    t = np.arange(length, dtype=np.float64)
    values = amplitude * np.sin(2.0 * np.pi * t / period)
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        values = values + rng.normal(0.0, noise_std, size=length)
    return TimeSeries(values, 0, np.zeros(length, dtype=np.int8))


def inject_point_outliers(series: TimeSeries, rate, magnitude, seed=0) -> TimeSeries:
    """Spike floor(rate * T) seeded-random points by +-magnitude.

    Spiked points get label 1; pre-existing labels are kept (OR-ed with the
    injected ones).
    """
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must be in (0, 1)")
    T = len(series)
    count = int(math.floor(rate * T))
    if count < 1:
        raise ValueError(f"rate {rate} selects no points on a series of length {T}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(T, size=count, replace=False)
    signs = rng.integers(0, 2, size=count) * 2 - 1
    values = series.values.copy()
    values[idx] += signs * magnitude
    labels = np.zeros(T, dtype=np.int8)
    if series.labels is not None:
        labels |= series.labels
    labels[idx] = 1
    return TimeSeries(values, series.start_index, labels)
