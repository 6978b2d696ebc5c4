"""Monte Carlo EM loop coupling the forecaster to the indicator chain.

Training alternates exact smoothing of the anomaly indicators (E-step)
with sampled-path updates of the forecaster and the chain (M-step): each
sampled path masks its anomalous steps out of one training epoch, with
masked inputs imputed by the previous model's forecast means.  Inference
runs the chain as an online filter, replacing points judged anomalous
before they enter later forecast windows.
"""

import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels, anomaly, serialize
from .anomaly import UniformAnomalyModel
from .data import ScaleParams, TimeSeries, robust_scale
from .forecaster import (
    GaussianPrediction,
    MlpForecaster,
    TrainMask,
    forecast_series_arrays,
    train_epoch,
)
from .hmm import (
    HmmParams,
    IndicatorPosterior,
    forward_backward,
    sample_paths_from_posterior,
    update_transitions,
)

#: Posterior-odds cutoff used for the internal imputation mask.
IMPUTE_THRESHOLD = 0.5


@dataclass(frozen=True)
class EmConfig:
    """All hyperparameters of one training run."""

    n_epochs: int = 10
    n_samples: int = 20
    warmup_epochs: int = 1
    p01_init: float = 0.01
    p11_init: float = 0.5
    smoothing: float = 1.0
    detection_threshold: float = 0.5
    context_length: int = 25
    hidden_sizes: tuple = (32, 32)
    learning_rate: float = 1e-2
    batch_size: int = 64
    variance_floor: float = 1e-4
    grad_clip: float = 10.0
    #: Re-estimate the chain's initial distribution each M-step.  Off by
    #: default: with equal emissions at the first step, the smoothed
    #: frequency estimate over few sampled paths drifts toward 0.5 and
    #: inflates the score of the first point of every scored series.
    update_initial: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_epochs < 0:
            raise ValueError("n_epochs must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.warmup_epochs < 0:
            raise ValueError("warmup_epochs must be >= 0")
        for name in ("p01_init", "p11_init", "detection_threshold"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")
        if self.smoothing < 0:
            raise ValueError("smoothing must be >= 0")
        if self.context_length < 1:
            raise ValueError("context_length must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.variance_floor > 0:
            raise ValueError("variance_floor must be > 0")
        if not self.grad_clip > 0:
            raise ValueError("grad_clip must be > 0")


@dataclass
class TrainedDetector:
    """Everything needed to score and forecast new data from one series."""

    forecaster: MlpForecaster
    hmm: HmmParams
    anomaly_model: UniformAnomalyModel
    scaler: ScaleParams
    train_posterior: IndicatorPosterior
    detection_threshold: float = 0.5

    def save(self, path) -> None:
        f_scalars, arrays = self.forecaster.to_payload()
        scalars = {
            "kind": "detector",
            "version": 1,
            "anomaly_low": self.anomaly_model.low,
            "anomaly_high": self.anomaly_model.high,
            "scale_median": self.scaler.median,
            "scale_iqr": self.scaler.iqr_scale,
            "detection_threshold": self.detection_threshold,
            "train_loglik": self.train_posterior.loglik,
            **f_scalars,
        }
        arrays = {
            **arrays,
            "hmm_initial": self.hmm.initial,
            "hmm_transition": self.hmm.transition,
            "train_marginals": self.train_posterior.marginals,
            "train_forward_log": self.train_posterior.forward_log,
        }
        serialize.save_bundle(path, scalars, arrays)

    @classmethod
    def load(cls, path) -> "TrainedDetector":
        scalars, arrays = serialize.load_bundle(path)
        if scalars.get("kind") != "detector":
            raise ValueError(f"{path}: not a detector file")
        return cls(
            forecaster=MlpForecaster.from_payload(scalars, arrays),
            hmm=HmmParams(arrays["hmm_initial"], arrays["hmm_transition"]),
            anomaly_model=UniformAnomalyModel(
                scalars["anomaly_low"], scalars["anomaly_high"]
            ),
            scaler=ScaleParams(scalars["scale_median"], scalars["scale_iqr"]),
            train_posterior=IndicatorPosterior(
                marginals=arrays["train_marginals"],
                forward_log=arrays["train_forward_log"],
                loglik=float(scalars["train_loglik"]),
            ),
            detection_threshold=float(scalars["detection_threshold"]),
        )


@dataclass(frozen=True)
class DetectionResult:
    """Online filtering output.

    ``scores[t]`` is the filtered P(z_t = 1 | x_{1:t}); ``flags`` thresholds
    the scores; ``replaced_values`` is the input series (original units)
    with every replaced point overwritten by its forecast mean.  Points in
    the first context window cannot be forecast, hence never replaced.
    """

    scores: np.ndarray
    flags: np.ndarray
    replaced_values: np.ndarray


def _emissions(forecaster, anomaly_model, values, mask):
    """(T, 2) emission log likelihoods; equal (0, 0) before the first forecast."""
    l = forecaster.context_length
    means, variances = forecast_series_arrays(forecaster, values, mask)
    T = values.shape[0]
    emissions = np.zeros((T, 2))
    resid = values[l:] - means
    emissions[l:, 0] = -0.5 * np.log(2.0 * np.pi * variances) - resid**2 / (
        2.0 * variances
    )
    emissions[l:, 1] = anomaly_model.log_density
    return emissions


def e_step(
    forecaster: MlpForecaster,
    anomaly_model: UniformAnomalyModel,
    hmm: HmmParams,
    series,
    mask: Optional[TrainMask],
) -> IndicatorPosterior:
    """Smoothed anomaly posterior of the series under the current models.

    Nominal emissions are one-step-ahead Gaussian log likelihoods with
    input windows imputed per ``mask`` (the replacements of the previous
    M-step); anomalous emissions are the constant uniform log density.
    Steps without a full context get equal emissions, so their posterior
    follows the chain alone.
    """
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series)
    return forward_backward(_emissions(forecaster, anomaly_model, values, mask), hmm)


def m_step(
    forecaster: MlpForecaster,
    hmm: HmmParams,
    series,
    posterior: IndicatorPosterior,
    impute_values: np.ndarray,
    config: EmConfig,
    seed: int,
):
    """One Monte Carlo M-step: sampled-path training plus chain update.

    Draws ``config.n_samples`` indicator paths from the posterior; each
    path masks its anomalous steps out of one training epoch (inputs
    imputed from ``impute_values``).  A path that leaves no trainable
    target is skipped with a warning; if every path is skipped this raises.
    The chain is re-estimated from all sampled paths.

    Returns:
        (forecaster, hmm): the forecaster updated in place and new chain
        parameters.
    """
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series)
    l = forecaster.context_length
    rng = np.random.default_rng(seed)
    paths = sample_paths_from_posterior(
        posterior, hmm, config.n_samples, int(rng.integers(2**63))
    )
    trained = 0
    for s in range(config.n_samples):
        epoch_seed = int(rng.integers(2**63))
        flags = paths[s].astype(bool)
        if flags[l:].all():
            warnings.warn(
                f"M-step sample {s} flags every target anomalous; skipping its epoch",
                RuntimeWarning,
            )
            continue
        mask = TrainMask(flags, impute_values)
        train_epoch(
            forecaster,
            values,
            mask,
            learning_rate=config.learning_rate,
            batch_size=config.batch_size,
            seed=epoch_seed,
            grad_clip=config.grad_clip,
        )
        trained += 1
    if trained == 0:
        raise RuntimeError("every sampled path flagged all targets anomalous")
    new_hmm = update_transitions(paths, config.smoothing)
    if not config.update_initial:
        new_hmm = HmmParams(hmm.initial, new_hmm.transition)
    return forecaster, new_hmm


def run_em(series: TimeSeries, config: EmConfig) -> TrainedDetector:
    """Train a detector on one series with Monte Carlo EM.

    The series is median/IQR scaled, the uniform anomaly model fit on the
    scaled values, and the chain initialized from the configured entry and
    persistence rates.  After ``warmup_epochs`` conventional epochs (all
    points treated nominal), E- and M-steps alternate ``n_epochs`` times; a
    final E-step produces the returned training posterior.  Deterministic
    given the seed.
    """
    l = config.context_length
    if len(series) <= l + 1:
        raise ValueError(f"series length {len(series)} must exceed context + 1 ({l + 1})")
    scaled, scaler = robust_scale(series)
    values = scaled.values
    anomaly_model = anomaly.fit(values)
    hmm = HmmParams.from_rates(config.p01_init, config.p11_init)
    master = np.random.default_rng(config.seed)

    forecaster = MlpForecaster.init(
        l, config.hidden_sizes, seed=int(master.integers(2**63)),
        variance_floor=config.variance_floor,
    )
    for _ in range(config.warmup_epochs):
        train_epoch(
            forecaster,
            values,
            None,
            learning_rate=config.learning_rate,
            batch_size=config.batch_size,
            seed=int(master.integers(2**63)),
            grad_clip=config.grad_clip,
        )

    def impute_from(mask):
        means, _ = forecast_series_arrays(forecaster, values, mask)
        return np.concatenate([values[:l], means])

    # Steps before the first forecast keep their raw values when flagged.
    mask = TrainMask.all_nominal(values)
    mask = TrainMask(mask.flags, impute_from(None))
    posterior = e_step(forecaster, anomaly_model, hmm, values, mask)

    for _ in range(config.n_epochs):
        forecaster, hmm = m_step(
            forecaster,
            hmm,
            values,
            posterior,
            mask.impute_values,
            config,
            int(master.integers(2**63)),
        )
        flags = posterior.marginals > IMPUTE_THRESHOLD
        prev = TrainMask(flags, mask.impute_values)
        mask = TrainMask(flags, impute_from(prev))
        posterior = e_step(forecaster, anomaly_model, hmm, values, mask)

    return TrainedDetector(
        forecaster=forecaster,
        hmm=hmm,
        anomaly_model=anomaly_model,
        scaler=scaler,
        train_posterior=posterior,
        detection_threshold=config.detection_threshold,
    )


def _online_pass(detector: TrainedDetector, series, threshold):
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series)
    l = detector.forecaster.context_length
    if values.shape[0] <= l:
        raise ValueError(f"series length {values.shape[0]} must exceed context ({l})")
    scaled = detector.scaler.transform(values)
    return _kernels.online_detect(
        detector.forecaster.weights,
        detector.forecaster.biases,
        detector.forecaster.variance_floor,
        np.ascontiguousarray(scaled),
        l,
        detector.hmm.log_initial,
        detector.hmm.log_transition,
        detector.anomaly_model.log_density,
        threshold,
    )


def detect_online(
    detector: TrainedDetector, series, threshold: Optional[float] = None
) -> DetectionResult:
    """Score a series left to right with the trained filter.

    Each point is scored by the filtered anomaly probability given the
    one-step forecast; points scoring above the threshold are replaced by
    their forecast mean before later windows are built.  ``threshold``
    defaults to the detector's training configuration.
    """
    if threshold is None:
        threshold = detector.detection_threshold
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series)
    scores, means, _, work = _online_pass(detector, series, threshold)
    l = detector.forecaster.context_length
    flags = scores > threshold
    replaced_values = values.copy()
    replaced = flags.copy()
    replaced[:l] = False
    replaced_values[replaced] = detector.scaler.inverse(means[replaced])
    return DetectionResult(scores=scores, flags=flags, replaced_values=replaced_values)


def forecast_robust(
    detector: TrainedDetector, series, threshold: Optional[float] = None
):
    """One-step forecasts from the same replacement-substituted pass.

    Returns predictions in the original series units for every step with a
    full context (the first ``context_length`` steps carry none).
    """
    if threshold is None:
        threshold = detector.detection_threshold
    _, means, variances, _ = _online_pass(detector, series, threshold)
    l = detector.forecaster.context_length
    s = detector.scaler.iqr_scale
    raw_means = detector.scaler.inverse(means[l:])
    raw_vars = variances[l:] * s * s
    return [GaussianPrediction(float(m), float(v)) for m, v in zip(raw_means, raw_vars)]


def conventional_config(config: EmConfig) -> EmConfig:
    """Baseline variant: the EM epochs become plain training epochs.

    Folds ``n_epochs`` into the warm-up so the model trains conventionally
    on every point; no indicator inference ever feeds back into training.
    """
    return replace(
        config,
        warmup_epochs=config.warmup_epochs + config.n_epochs,
        n_epochs=0,
    )
