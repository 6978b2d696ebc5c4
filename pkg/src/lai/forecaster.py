"""Windowed MLP forecaster with a per-step Gaussian predictive head.

The network maps the last ``context_length`` values to (mean, raw variance);
the predicted variance is softplus(raw) + variance_floor.  Training is
mini-batch SGD on the Gaussian negative log likelihood with per-batch
gradient clipping.  Anomalous points can be masked out: their values are
replaced in input windows and their targets excluded from the loss.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels, serialize
from .data import TimeSeries

DEFAULT_GRAD_CLIP = 10.0


class GaussianPrediction(NamedTuple):
    mean: float
    variance: float


@dataclass(frozen=True)
class TrainMask:
    """Per-step anomaly flags with replacement values for flagged inputs.

    ``flags[t]`` True marks step t anomalous: its value is replaced by
    ``impute_values[t]`` wherever it appears in an input window, and it is
    excluded as a training target.
    """

    flags: np.ndarray
    impute_values: np.ndarray

    def __post_init__(self):
        flags = np.asarray(self.flags, dtype=bool)
        impute = np.asarray(self.impute_values, dtype=np.float64)
        if flags.shape != impute.shape or flags.ndim != 1:
            raise ValueError("flags and impute_values must be 1-D and equal length")
        object.__setattr__(self, "flags", flags)
        object.__setattr__(self, "impute_values", impute)

    @classmethod
    def all_nominal(cls, values):
        values = np.asarray(values, dtype=np.float64)
        return cls(np.zeros(values.shape, dtype=bool), values)


def _values_of(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return np.asarray(series, dtype=np.float64)


@dataclass
class MlpForecaster:
    """Tanh MLP taking the last ``context_length`` points, Gaussian output."""

    context_length: int
    weights: list
    biases: list
    variance_floor: float = 1e-4

    @property
    def hidden_sizes(self):
        return tuple(w.shape[1] for w in self.weights[:-1])

    @classmethod
    def init(
        cls,
        context_length: int,
        hidden_sizes: Sequence[int] = (32, 32),
        seed: int = 0,
        variance_floor: float = 1e-4,
    ) -> "MlpForecaster":
        """Seeded fan-in-scaled uniform initialization.

        Hidden layers draw from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).  The
        output head draws from U(-0.5/fan_in, 0.5/fan_in) with a
        raw-variance bias of softplus_inv(1 - variance_floor): since tanh
        activations are bounded, the initial predictive variance is within
        [0.5, 2.0] on every window, whatever the window contains.
        """
        if context_length < 1:
            raise ValueError("context_length must be >= 1")
        if any(h < 1 for h in hidden_sizes):
            raise ValueError("hidden sizes must be >= 1")
        if not variance_floor > 0:
            raise ValueError("variance_floor must be > 0")
        rng = np.random.default_rng(seed)
        sizes = [context_length, *hidden_sizes, 2]
        weights, biases = [], []
        for k in range(len(sizes) - 1):
            if k == len(sizes) - 2:
                bound = 0.5 / sizes[k]
            else:
                bound = 1.0 / math.sqrt(sizes[k])
            weights.append(rng.uniform(-bound, bound, size=(sizes[k], sizes[k + 1])))
            biases.append(np.zeros(sizes[k + 1]))
        # raw-variance bias such that softplus(bias) + floor == 1
        biases[-1][1] = math.log(math.expm1(1.0 - variance_floor))
        return cls(
            context_length=context_length,
            weights=weights,
            biases=biases,
            variance_floor=variance_floor,
        )

    def forecast(self, window) -> GaussianPrediction:
        """One-step prediction from the last ``context_length`` values."""
        window = np.ascontiguousarray(window, dtype=np.float64)
        if window.shape != (self.context_length,):
            raise ValueError(
                f"window must have length {self.context_length}, got {window.shape}"
            )
        if not np.all(np.isfinite(window)):
            raise ValueError("window contains non-finite values")
        mean, var = _kernels.mlp_forward(
            self.weights, self.biases, window[None, :], self.variance_floor
        )
        return GaussianPrediction(float(mean[0]), float(var[0]))

    def forecast_batch(self, windows):
        """Vectorized forecast over a (B, context_length) window matrix."""
        windows = np.ascontiguousarray(windows, dtype=np.float64)
        if windows.ndim != 2 or windows.shape[1] != self.context_length:
            raise ValueError("windows must be (B, context_length)")
        if not np.all(np.isfinite(windows)):
            raise ValueError("windows contain non-finite values")
        return _kernels.mlp_forward(
            self.weights, self.biases, windows, self.variance_floor
        )

    def copy(self) -> "MlpForecaster":
        return MlpForecaster(
            context_length=self.context_length,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            variance_floor=self.variance_floor,
        )

    def save(self, path) -> None:
        scalars, arrays = self.to_payload()
        serialize.save_bundle(path, {"kind": "forecaster", **scalars}, arrays)

    @classmethod
    def load(cls, path) -> "MlpForecaster":
        scalars, arrays = serialize.load_bundle(path)
        return cls.from_payload(scalars, arrays)

    def to_payload(self):
        scalars = {
            "context_length": self.context_length,
            "variance_floor": self.variance_floor,
            "n_layers": len(self.weights),
        }
        arrays = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"w{k}"] = w
            arrays[f"b{k}"] = b
        return scalars, arrays

    @classmethod
    def from_payload(cls, scalars, arrays) -> "MlpForecaster":
        n = int(scalars["n_layers"])
        return cls(
            context_length=int(scalars["context_length"]),
            weights=[arrays[f"w{k}"] for k in range(n)],
            biases=[arrays[f"b{k}"] for k in range(n)],
            variance_floor=float(scalars["variance_floor"]),
        )


def nll(pred: GaussianPrediction, x: float) -> float:
    """Gaussian negative log likelihood of x under the prediction."""
    if not pred.variance > 0:
        raise ValueError("variance must be positive")
    return 0.5 * math.log(2.0 * math.pi * pred.variance) + (x - pred.mean) ** 2 / (
        2.0 * pred.variance
    )


def _window_matrix(values: np.ndarray, mask: Optional[TrainMask], l: int):
    """Input windows and targets for every step with a full context.

    Returns (X, y, include): X[i] is the window predicting step l + i built
    from mask-replaced values, y[i] the raw target, include[i] False when
    the target itself is flagged anomalous.
    """
    T = values.shape[0]
    if T <= l:
        raise ValueError(f"series length {T} must exceed context length {l}")
    if mask is None:
        x_input = values
        include = np.ones(T - l, dtype=bool)
    else:
        if mask.flags.shape[0] != T:
            raise ValueError("mask length must match series length")
        x_input = np.where(mask.flags, mask.impute_values, values)
        include = ~mask.flags[l:]
    X = np.lib.stride_tricks.sliding_window_view(x_input, l)[:-1]
    return X, values[l:], include


def train_epoch(
    model: MlpForecaster,
    series,
    mask: Optional[TrainMask],
    learning_rate: float = 1e-2,
    batch_size: int = 64,
    seed: int = 0,
    grad_clip: float = DEFAULT_GRAD_CLIP,
):
    """One pass of mini-batch SGD over a seeded shuffle of the windows.

    Flagged targets are excluded from the loss; flagged inputs are imputed
    from the mask.  The model is updated in place.

    Returns:
        (model, mean NLL over included targets at the parameters each batch
        was visited with).
    """
    values = _values_of(series)
    X, y, include = _window_matrix(values, mask, model.context_length)
    if not include.any():
        raise ValueError("no trainable targets: every target is flagged anomalous")
    Xi = np.ascontiguousarray(X[include])
    yi = np.ascontiguousarray(y[include])
    n = yi.shape[0]
    order = np.random.default_rng(seed).permutation(n)
    total = 0.0
    for lo in range(0, n, batch_size):
        sel = order[lo : lo + batch_size]
        loss, gws, gbs = _kernels.mlp_loss_grad(
            model.weights, model.biases, Xi[sel], yi[sel], model.variance_floor
        )
        total += loss * sel.size
        sq = sum(float(np.sum(g * g)) for g in gws) + sum(
            float(np.sum(g * g)) for g in gbs
        )
        scale = learning_rate
        norm = math.sqrt(sq)
        if norm > grad_clip:
            scale *= grad_clip / norm
        for w, g in zip(model.weights, gws):
            w -= scale * g
        for b, g in zip(model.biases, gbs):
            b -= scale * g
    return model, total / n


def forecast_series_arrays(model: MlpForecaster, values, mask: Optional[TrainMask]):
    """Rolling one-step forecasts as (means, variances) arrays.

    Entry i predicts step context_length + i.  Input windows use the
    mask-replaced values, so imputation propagates through every window
    that covers a flagged step.
    """
    values = _values_of(values)
    X, _, _ = _window_matrix(values, mask, model.context_length)
    return _kernels.mlp_forward(
        model.weights, model.biases, np.ascontiguousarray(X), model.variance_floor
    )


def forecast_series(model: MlpForecaster, series, mask: Optional[TrainMask]):
    """Rolling one-step forecasts as GaussianPrediction objects.

    The first ``context_length`` steps carry no prediction; entry i of the
    result predicts step context_length + i.
    """
    means, variances = forecast_series_arrays(model, series, mask)
    return [GaussianPrediction(float(m), float(v)) for m, v in zip(means, variances)]
