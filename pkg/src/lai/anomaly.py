"""Fixed anomalous-data likelihood: uniform over the padded training range."""

import math
from dataclasses import dataclass

import numpy as np

RANGE_PAD_FRACTION = 0.1


@dataclass(frozen=True)
class UniformAnomalyModel:
    """Constant density 1 / (high - low), also applied outside [low, high].

    Points beyond the fitted range are the most anomalous ones of all, so
    the alternative hypothesis must not assign them zero likelihood.
    """

    low: float
    high: float

    def __post_init__(self):
        if not self.high > self.low:
            raise ValueError("high must exceed low")

    @property
    def log_density(self) -> float:
        return -math.log(self.high - self.low)

    def loglik(self, x):
        """Log density of x; constant, independent of x (scalar or array)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0:
            return self.log_density
        return np.full(x.shape, self.log_density)


def fit(train_values) -> UniformAnomalyModel:
    """Fit the support to the training data, padded by 10% of its range.

    The padding keeps borderline training extremes off the support boundary.
    Raises on constant input (degenerate range).
    """
    values = np.asarray(train_values, dtype=np.float64)
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        raise ValueError("cannot fit a uniform model to constant values")
    pad = RANGE_PAD_FRACTION * (hi - lo)
    return UniformAnomalyModel(low=lo - pad, high=hi + pad)
