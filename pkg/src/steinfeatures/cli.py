"""Command line entry point.

Subcommands: kernel-approx and regression run config-driven benchmark
experiments; fit trains a model on a CSV and writes a self-contained
model file; predict applies a model file to new feature rows.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .bench.config import REGRESSION_METHODS, ExperimentConfig, load_config
from .bench.datasets import fit_scaler, load_csv, load_features, Scaler
from .bench.experiments import _ceil_cbrt, run_kernel_approx, run_regression
from .bench.reports import emit_report
from .errors import (
    ConfigurationError,
    DatasetError,
    IllConditionedKernelError,
    NumericalDivergenceError,
    OptimizationFailureError,
    UnsupportedDimensionError,
)
from .msrfr import (
    MixtureModel,
    MsrfrTrainConfig,
    initial_mixture,
    mixture_from_dict,
    mixture_to_dict,
    msrfr_predict,
    train_msrfr,
)
from .ssgp import TrainConfig, initial_ssgp, train_ssgp_mle, train_ssgp_svgd

_MODEL_FORMAT = "stein-features-model"
_MODEL_VERSION = 1

_ERRORS = (
    ConfigurationError,
    DatasetError,
    IllConditionedKernelError,
    NumericalDivergenceError,
    OptimizationFailureError,
    UnsupportedDimensionError,
)


def _cmd_experiment(args, runner):
    config = load_config(args.config)
    updates = {}
    if args.seed is not None:
        updates["seeds"] = [args.seed]
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.format is not None:
        updates["format"] = args.format
    if updates:
        config = replace(config, **updates)
    rows = runner(config)
    emit_report(rows, config.output, config.format)
    print(f"wrote {len(rows)} rows to {config.output}")
    return 0


def _fit_mixture(method, x, y, args) -> MixtureModel:
    """Train the requested method on standardized data; single models are
    stored as one-component mixtures so every model file looks the same."""
    if method == "msrfr":
        init = initial_mixture(
            x, y, args.r, args.m, seed=[5, args.seed],
            temperature=args.alpha, prior_scale=args.prior_scale,
        )
        config = MsrfrTrainConfig(
            step_size=args.step_size,
            iterations=args.iterations,
            optimizer=args.optimizer,
        )
        model, _ = train_msrfr(x, y, init, config)
        return model

    r = _ceil_cbrt(args.m * args.r**3) if method == "ssgp-rstar" else args.r
    init = initial_ssgp(x, y, r, seed=np.random.SeedSequence([5, args.seed]))
    if method == "ssgp-rbf":
        config = TrainConfig(
            step_size=args.step_size,
            iterations=min(args.iterations, 50),
            optimizer="plain",
            learn_frequencies=False,
        )
        model, _ = train_ssgp_mle(x, y, init, config)
    elif method in ("ssgp", "ssgp-rstar"):
        config = TrainConfig(
            step_size=args.step_size,
            iterations=args.iterations,
            optimizer=args.optimizer,
        )
        model, _ = train_ssgp_mle(x, y, init, config)
    else:  # ssgp-svgd
        config = TrainConfig(
            step_size=args.step_size,
            iterations=args.iterations,
            entropy_weight=args.entropy_weight,
            optimizer=args.optimizer,
        )
        model, _ = train_ssgp_svgd(x, y, init, config)
    return MixtureModel(
        components=model.omega[None, :, :],
        noise_variance=model.noise_variance,
        temperature=args.alpha,
        prior_scale=args.prior_scale,
    )


def _cmd_fit(args):
    data = load_csv(args.data, args.target)
    scaler = fit_scaler(data.x, data.y, data.name)
    x = scaler.transform_x(data.x)
    y = scaler.transform_y(data.y)
    mixture = _fit_mixture(args.method, x, y, args)
    payload = {
        "format": _MODEL_FORMAT,
        "version": _MODEL_VERSION,
        "method": args.method,
        "mixture": mixture_to_dict(mixture),
        "feature_names": list(data.feature_names),
        "target_name": data.target_name,
        "scaler": {
            "x_mean": scaler.x_mean.tolist(),
            "x_scale": scaler.x_scale.tolist(),
            "y_mean": scaler.y_mean,
            "y_scale": scaler.y_scale,
            "kept": list(scaler.kept),
        },
        "x_train": x.tolist(),
        "y_train": y.tolist(),
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")
    print(f"fit {args.method} on {data.n} rows ({x.shape[0]} features); wrote {args.out}")
    return 0


def _cmd_predict(args):
    try:
        with open(args.model, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise DatasetError(f"model file not found: {args.model}") from None
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"{args.model}: invalid model file ({err})") from None
    if payload.get("format") != _MODEL_FORMAT or payload.get("version") != _MODEL_VERSION:
        raise ConfigurationError(
            f"{args.model}: expected {_MODEL_FORMAT} v{_MODEL_VERSION}, "
            f"got {payload.get('format')!r} v{payload.get('version')!r}"
        )
    mixture = mixture_from_dict(payload["mixture"])
    raw = payload["scaler"]
    scaler = Scaler(
        x_mean=np.asarray(raw["x_mean"], dtype=float),
        x_scale=np.asarray(raw["x_scale"], dtype=float),
        y_mean=float(raw["y_mean"]),
        y_scale=float(raw["y_scale"]),
        kept=tuple(raw["kept"]),
    )
    x_train = np.asarray(payload["x_train"], dtype=float)
    y_train = np.asarray(payload["y_train"], dtype=float)

    x_raw = load_features(args.data, payload["feature_names"])
    x_new = scaler.transform_x(x_raw)
    mean_std, cov_std = msrfr_predict(mixture, x_train, y_train, x_new)
    mean = scaler.inverse_mean(mean_std)
    # reported variance includes observation noise, matching how the
    # benchmark scores predictive density
    variance = scaler.inverse_variance(np.diag(cov_std) + mixture.noise_variance)
    rows = [
        {"row": i, "mean": float(mu), "variance": float(v)}
        for i, (mu, v) in enumerate(zip(mean, variance))
    ]
    emit_report(rows, args.out, args.format)
    print(f"wrote {len(rows)} predictions to {args.out}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="stein-features",
        description="Random Fourier feature Gram approximation and "
        "sparse-spectrum GP regression benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("kernel-approx", "run the Gram approximation experiment"),
        ("regression", "run the regression benchmark"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="replace the config's seed list with this one seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes for independent cells")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="override the report format")

    fit = sub.add_parser("fit", help="train a model on a CSV and save it")
    fit.add_argument("--data", required=True, help="training CSV with a header row")
    fit.add_argument("--target", required=True, help="target column name")
    fit.add_argument("--method", required=True, choices=REGRESSION_METHODS)
    fit.add_argument("--out", required=True, help="model file to write")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--r", type=int, default=50, help="frequencies per component")
    fit.add_argument("--m", type=int, default=4, help="mixture components")
    fit.add_argument("--iterations", type=int, default=150)
    fit.add_argument("--step-size", dest="step_size", type=float, default=0.1)
    fit.add_argument("--optimizer", choices=("plain", "adagrad"), default="adagrad")
    fit.add_argument("--alpha", type=float, default=1.0, help="repulsion temperature")
    fit.add_argument("--prior-scale", dest="prior_scale", type=float, default=10.0)
    fit.add_argument("--entropy-weight", dest="entropy_weight", type=float, default=1.0)

    predict = sub.add_parser("predict", help="apply a saved model to new rows")
    predict.add_argument("--model", required=True, help="model file from fit")
    predict.add_argument("--data", required=True, help="CSV with the feature columns")
    predict.add_argument("--out", required=True, help="prediction file to write")
    predict.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "kernel-approx":
            return _cmd_experiment(args, run_kernel_approx)
        if args.command == "regression":
            return _cmd_experiment(args, run_regression)
        if args.command == "fit":
            return _cmd_fit(args)
        return _cmd_predict(args)
    except _ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
