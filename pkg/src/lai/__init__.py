"""Latent-anomaly-indicator training for probabilistic time-series forecasters.

Forecasting models trained on contaminated series learn the contamination.
This package trains a windowed Gaussian MLP forecaster jointly with a
two-state hidden Markov chain over per-step anomaly indicators, using
Monte Carlo EM so the forecaster only ever fits points inferred nominal.
The trained bundle detects anomalies online (filtering) and forecasts
robustly by replacing detected points before they enter later windows.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .anomaly import UniformAnomalyModel
from .data import (
    ScaleParams,
    SplitSpec,
    TimeSeries,
    generate_sinusoid,
    inject_point_outliers,
    load_csv,
    robust_scale,
    save_csv,
    split,
    subsample,
)
from .em import (
    DetectionResult,
    EmConfig,
    TrainedDetector,
    conventional_config,
    detect_online,
    e_step,
    forecast_robust,
    m_step,
    run_em,
)
from .forecaster import (
    GaussianPrediction,
    MlpForecaster,
    TrainMask,
    forecast_series,
    nll,
    train_epoch,
)
from .hmm import (
    HmmParams,
    IndicatorPosterior,
    filter_step,
    forward_backward,
    initial_belief,
    sample_paths,
    update_transitions,
)
from .metrics import (
    MetricReport,
    adjusted_f1,
    best_f1_sweep,
    combine_reports,
    mae,
    point_adjust,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "UniformAnomalyModel",
    "ScaleParams",
    "SplitSpec",
    "TimeSeries",
    "generate_sinusoid",
    "inject_point_outliers",
    "load_csv",
    "robust_scale",
    "save_csv",
    "split",
    "subsample",
    "DetectionResult",
    "EmConfig",
    "TrainedDetector",
    "conventional_config",
    "detect_online",
    "e_step",
    "forecast_robust",
    "m_step",
    "run_em",
    "GaussianPrediction",
    "MlpForecaster",
    "TrainMask",
    "forecast_series",
    "nll",
    "train_epoch",
    "HmmParams",
    "IndicatorPosterior",
    "filter_step",
    "forward_backward",
    "initial_belief",
    "sample_paths",
    "update_transitions",
    "MetricReport",
    "adjusted_f1",
    "best_f1_sweep",
    "combine_reports",
    "mae",
    "point_adjust",
]
