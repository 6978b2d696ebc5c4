"""Command line entry point for reproducible seeded experiments.

Subcommands: ``synth`` (generate a contaminated series), ``train`` (fit a
detector on the train split), ``detect`` (online scoring plus adjusted-F1
report), ``forecast-eval`` (MAE of baseline vs indicator-trained models
under optional train-set contamination).  Every command takes ``--config``
with flat ``key = value`` lines; explicit flags override file values.
Reports are key-value text embedding the fully resolved configuration.
"""

import argparse
import glob
import os
import sys

import numpy as np

from . import metrics
from .data import (
    SplitSpec,
    generate_sinusoid,
    inject_point_outliers,
    load_csv,
    save_csv,
    split,
    subsample,
)
from .em import EmConfig, TrainedDetector, conventional_config, detect_online, forecast_robust, run_em
from .forecaster import forecast_series_arrays


class CliError(Exception):
    pass


# ----------------------------------------------------------------------
# configuration handling


def parse_config_file(path):
    """Read flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{line_no}: expected 'key = value'")
                key, value = line.split("=", 1)
                out[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}") from exc
    return out


def _coerce(key, value, template):
    if isinstance(template, bool):
        lowered = str(value).strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise CliError(f"config key {key}: expected a boolean, got {value!r}")
    if isinstance(template, int):
        return int(value)
    if isinstance(template, float):
        return float(value)
    return str(value)


def resolve_config(defaults, args):
    """Layer defaults < config file < explicit flags; coerce file strings."""
    resolved = dict(defaults)
    explicit = {
        k: v for k, v in vars(args).items() if k not in ("command", "func", "defaults")
    }
    config_path = explicit.pop("config", None)
    if config_path:
        for key, value in parse_config_file(config_path).items():
            if key not in defaults:
                raise CliError(f"unknown config key {key!r}")
            resolved[key] = _coerce(key, value, defaults[key])
    resolved.update(explicit)
    return resolved


def _hidden_sizes(text):
    if not str(text).strip():
        return ()
    try:
        return tuple(int(p) for p in str(text).split(","))
    except ValueError:
        raise CliError(f"invalid hidden sizes {text!r}; expected e.g. '32,32'") from None


def _em_config(cfg):
    try:
        return EmConfig(
            n_epochs=cfg["epochs"],
            n_samples=cfg["samples"],
            warmup_epochs=cfg["warmup_epochs"],
            p01_init=cfg["p01"],
            p11_init=cfg["p11"],
            smoothing=cfg["smoothing"],
            detection_threshold=cfg["threshold"],
            context_length=cfg["context_length"],
            hidden_sizes=_hidden_sizes(cfg["hidden_sizes"]),
            learning_rate=cfg["learning_rate"],
            batch_size=cfg["batch_size"],
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


# ----------------------------------------------------------------------
# output handling


class OutputTracker:
    """Removes every file it created if the command fails midway."""

    def __init__(self):
        self.paths = []

    def open(self, path, mode="w"):
        self.paths.append(path)
        newline = "" if mode == "w" else None
        return open(path, mode, newline=newline, encoding=None if "b" in mode else "utf-8")

    def register(self, path):
        self.paths.append(path)
        return path

    def cleanup(self):
        for path in self.paths:
            try:
                os.remove(path)
            except OSError:
                pass


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    return str(value)


def write_report(fh, pairs, cfg):
    for key, value in pairs:
        fh.write(f"{key} = {_fmt(value)}\n")
    for key in sorted(cfg):
        fh.write(f"config.{key} = {_fmt(cfg[key])}\n")


def _write_trace(fh, header, rows):
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(v) for v in row) + "\n")


def _prepare_outdir(cfg):
    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


# ----------------------------------------------------------------------
# commands


SYNTH_DEFAULTS = {
    "output_dir": ".",
    "length": 1000,
    "period": 50.0,
    "amplitude": 1.0,
    "noise_std": 0.05,
    "rate": 0.01,
    "magnitude": 5.0,
    "seed": 0,
}


def cmd_synth(cfg, tracker):
    outdir = _prepare_outdir(cfg)
    series = generate_sinusoid(
        cfg["length"], cfg["period"], cfg["amplitude"], cfg["noise_std"], cfg["seed"]
    )
    try:
        series = inject_point_outliers(series, cfg["rate"], cfg["magnitude"], cfg["seed"] + 1)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    path = tracker.register(os.path.join(outdir, "synthetic.csv"))
    save_csv(path, series)
    print(path)
    return 0


TRAIN_DEFAULTS = {
    "input": "",
    "output_dir": ".",
    "seed": 0,
    "epochs": 10,
    "samples": 20,
    "warmup_epochs": 20,
    "context_length": 25,
    "hidden_sizes": "32,32",
    "learning_rate": 1e-2,
    "batch_size": 64,
    "p01": 0.01,
    "p11": 0.5,
    "smoothing": 1.0,
    "threshold": 0.5,
    "train_frac": 0.4,
    "val_frac": 0.1,
    "factor": 1,
    "no_lai": False,
}


def _load_and_split(cfg):
    if not cfg["input"]:
        raise CliError("--input is required")
    series = load_csv(cfg["input"])
    if cfg["factor"] > 1:
        series = subsample(series, cfg["factor"])
    try:
        spec = SplitSpec(cfg["train_frac"], cfg["val_frac"])
        return split(series, spec)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_train(cfg, tracker):
    config = _em_config(cfg)
    train, val, test = _load_and_split(cfg)
    outdir = _prepare_outdir(cfg)
    if cfg["no_lai"]:
        detector = run_em(train, conventional_config(config))
        posterior_col = np.zeros(len(train))
    else:
        detector = run_em(train, config)
        posterior_col = detector.train_posterior.marginals

    stem = _stem(cfg["input"])
    detector_path = tracker.register(os.path.join(outdir, f"{stem}.detector"))
    detector.save(detector_path)
    with tracker.open(os.path.join(outdir, f"{stem}_train_trace.csv")) as fh:
        _write_trace(
            fh,
            ["index", "value", "posterior"],
            zip(
                range(train.start_index, train.start_index + len(train)),
                (float(v) for v in train.values),
                (float(p) for p in posterior_col),
            ),
        )
    test_path = tracker.register(os.path.join(outdir, f"{stem}_test.csv"))
    save_csv(test_path, test)
    if val is not None:
        val_path = tracker.register(os.path.join(outdir, f"{stem}_val.csv"))
        save_csv(val_path, val)
    print(detector_path)
    return 0


DETECT_DEFAULTS = {
    "input": "",
    "detector": "",
    "output_dir": ".",
    "threshold": 0.5,
}


def _detector_for(detector_arg, series_path):
    if os.path.isdir(detector_arg):
        candidate = os.path.join(detector_arg, _stem(series_path) + ".detector")
        # train emits <input stem>_test.csv; map it back to its detector
        if not os.path.exists(candidate) and _stem(series_path).endswith("_test"):
            candidate = os.path.join(
                detector_arg, _stem(series_path)[: -len("_test")] + ".detector"
            )
        if not os.path.exists(candidate):
            raise CliError(f"no detector found for {series_path} in {detector_arg}")
        return candidate
    return detector_arg


def cmd_detect(cfg, tracker):
    if not cfg["input"]:
        raise CliError("--input is required")
    if not cfg["detector"]:
        raise CliError("--detector is required")
    paths = sorted(glob.glob(cfg["input"])) if glob.has_magic(cfg["input"]) else [cfg["input"]]
    if not paths:
        raise CliError(f"no input files match {cfg['input']!r}")
    outdir = _prepare_outdir(cfg)

    reports = []
    unlabeled = []
    for path in paths:
        series = load_csv(path)
        detector = TrainedDetector.load(_detector_for(cfg["detector"], path))
        result = detect_online(detector, series, threshold=cfg["threshold"])
        stem = _stem(path)
        with tracker.open(os.path.join(outdir, f"{stem}_score_trace.csv")) as fh:
            _write_trace(
                fh,
                ["index", "value", "score", "flag"],
                zip(
                    range(series.start_index, series.start_index + len(series)),
                    (float(v) for v in series.values),
                    (float(s) for s in result.scores),
                    (int(f) for f in result.flags),
                ),
            )
        if series.labels is not None:
            reports.append(metrics.best_f1_sweep(result.scores, series.labels, name=stem))
        else:
            unlabeled.append(stem)

    with tracker.open(os.path.join(outdir, "detect_report.txt")) as fh:
        pairs = [("inputs", len(paths))]
        if reports:
            combined = metrics.combine_reports(reports)
            pairs += [
                ("mean_best_f1", combined.best_f1),
                ("mean_precision", combined.precision),
                ("mean_recall", combined.recall),
            ]
            for entry in combined.per_series:
                pairs += [
                    (f"series.{entry.name}.best_f1", entry.best_f1),
                    (f"series.{entry.name}.best_threshold", entry.best_threshold),
                    (f"series.{entry.name}.precision", entry.precision),
                    (f"series.{entry.name}.recall", entry.recall),
                ]
        else:
            pairs.append(("metrics", "absent (no labels)"))
        for stem in unlabeled:
            pairs.append((f"series.{stem}.metrics", "absent (no labels)"))
        write_report(fh, pairs, cfg)
    print(os.path.join(outdir, "detect_report.txt"))
    return 0


FORECAST_EVAL_DEFAULTS = {
    "input": "",
    "output_dir": ".",
    "seed": 0,
    "epochs": 10,
    "samples": 20,
    "warmup_epochs": 20,
    "context_length": 25,
    "hidden_sizes": "32,32",
    "learning_rate": 1e-2,
    "batch_size": 64,
    "p01": 0.01,
    "p11": 0.5,
    "smoothing": 1.0,
    "threshold": 0.5,
    "train_frac": 0.4,
    "val_frac": 0.1,
    "factor": 1,
    "rate": 0.0,
    "magnitude": 0.0,
}


def _plain_mae(detector, test):
    """MAE of conventional rolling forecasts, original units."""
    l = detector.forecaster.context_length
    scaled = detector.scaler.transform(test.values)
    means, _ = forecast_series_arrays(detector.forecaster, scaled, None)
    preds = detector.scaler.inverse(means)
    return metrics.mae(preds, test.values[l:])


def _robust_mae(detector, test):
    preds = forecast_robust(detector, test)
    return metrics.mae([p.mean for p in preds], test.values[detector.forecaster.context_length:])


def cmd_forecast_eval(cfg, tracker):
    config = _em_config(cfg)
    contaminate = cfg["rate"] > 0
    # no silent default spike size: contamination must state its magnitude
    if contaminate and not cfg["magnitude"] > 0:
        raise CliError("--magnitude must be > 0 when --rate is set")
    train, val, test = _load_and_split(cfg)
    outdir = _prepare_outdir(cfg)

    baseline_clean = run_em(train, conventional_config(config))
    lai_clean = run_em(train, config)
    pairs = [
        ("mae_baseline_clean_train", _plain_mae(baseline_clean, test)),
        ("mae_lai_clean_train", _robust_mae(lai_clean, test)),
    ]
    if contaminate:
        try:
            dirty = inject_point_outliers(train, cfg["rate"], cfg["magnitude"], cfg["seed"] + 1)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        baseline_dirty = run_em(dirty, conventional_config(config))
        lai_dirty = run_em(dirty, config)
        mae_b = _plain_mae(baseline_dirty, test)
        mae_l = _robust_mae(lai_dirty, test)
        pairs += [
            ("mae_baseline_contaminated_train", mae_b),
            ("mae_lai_contaminated_train", mae_l),
            ("degradation_baseline", mae_b - pairs[0][1]),
            ("degradation_lai", mae_l - pairs[1][1]),
        ]
    report_path = os.path.join(outdir, "forecast_report.txt")
    with tracker.open(report_path) as fh:
        write_report(fh, pairs, cfg)
    print(report_path)
    return 0


# ----------------------------------------------------------------------
# argument parsing


def _add_common(sub, defaults):
    sub.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value file")
    for key, value in defaults.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            sub.add_argument(flag, action="store_true", default=argparse.SUPPRESS)
        else:
            sub.add_argument(
                flag, type=type(value), default=argparse.SUPPRESS, metavar=key.upper()
            )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lai",
        description="Anomaly-robust forecaster training with a latent indicator chain",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a contaminated sinusoid CSV")
    _add_common(p, SYNTH_DEFAULTS)
    p.set_defaults(func=cmd_synth, defaults=SYNTH_DEFAULTS)

    p = sub.add_parser("train", help="train a detector on the train split of a CSV")
    _add_common(p, TRAIN_DEFAULTS)
    p.set_defaults(func=cmd_train, defaults=TRAIN_DEFAULTS)

    p = sub.add_parser("detect", help="online detection and adjusted-F1 report")
    _add_common(p, DETECT_DEFAULTS)
    p.set_defaults(func=cmd_detect, defaults=DETECT_DEFAULTS)

    p = sub.add_parser(
        "forecast-eval", help="MAE of baseline vs indicator training, optionally contaminated"
    )
    _add_common(p, FORECAST_EVAL_DEFAULTS)
    p.set_defaults(func=cmd_forecast_eval, defaults=FORECAST_EVAL_DEFAULTS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    tracker = OutputTracker()
    try:
        cfg = resolve_config(args.defaults, args)
        return args.func(cfg, tracker)
    except (CliError, OSError, ValueError, RuntimeError) as exc:
        tracker.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
