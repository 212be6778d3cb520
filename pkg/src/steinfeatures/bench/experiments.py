"""Benchmark runners: Gram approximation error and regression quality.

Each (cell) is a pure function of its parameters and seed, so cells can
run in any order or in parallel and the sorted report comes out the same.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from ..errors import (
    ConfigurationError,
    IllConditionedKernelError,
    NumericalDivergenceError,
    OptimizationFailureError,
)
from ..exact_gp import exact_gram, gram_error, nystrom_gram
from ..msrfr import (
    MsrfrTrainConfig,
    initial_mixture,
    msrfr_predict,
    nlpd,
    rmse,
    train_msrfr,
)
from ..spectral import (
    GaussianSpectralDensity,
    rff_gram,
    sample_mc,
    sample_orf,
    sample_qmc,
    sample_svgd,
)
from ..ssgp import (
    TrainConfig,
    initial_ssgp,
    median_input_lengthscale,
    ssgp_predict,
    train_ssgp_mle,
    train_ssgp_svgd,
)
from .config import KERNEL_SAMPLERS, REGRESSION_METHODS, ExperimentConfig
from .datasets import Dataset, load_csv, split_standardize, synthetic_ssgp_dataset
from .reports import sort_rows

_DATASET_KEYS = {"name", "path", "target", "n", "dim", "seed", "r_true", "noise_std", "lengthscale"}

_FAILURES = (NumericalDivergenceError, OptimizationFailureError, IllConditionedKernelError)


def _kernel_cell(params):
    sampler, r, d, seed, n_points, lengthscale, svgd_steps, svgd_step_size = params
    # the input draw is shared by all samplers at a given (seed, d);
    # the sampler stream is keyed separately so the two never collide
    inputs_rng = np.random.default_rng(np.random.SeedSequence([0, seed, d]))
    x = inputs_rng.standard_normal((d, n_points))
    ls = np.full(d, float(lengthscale))
    exact = exact_gram(x, lengthscales=ls)
    density = GaussianSpectralDensity(ls)
    sampler_seed = np.random.SeedSequence([1, seed, KERNEL_SAMPLERS.index(sampler)])

    if sampler == "mc":
        approx = rff_gram(x, sample_mc(density, r, sampler_seed))
    elif sampler == "qmc":
        approx = rff_gram(x, sample_qmc(density, r))
    elif sampler == "orf":
        approx = rff_gram(x, sample_orf(density, r, sampler_seed))
    elif sampler == "svgd":
        omega = sample_svgd(
            density, r, sampler_seed, steps=svgd_steps, step_size=svgd_step_size
        )
        approx = rff_gram(x, omega)
    else:  # nystrom; landmark count cannot exceed the point count
        approx = nystrom_gram(x, ls, min(r, n_points), sampler_seed)

    return {
        "sampler": sampler,
        "r": r,
        "d": d,
        "seed": seed,
        "error": gram_error(exact, approx),
    }


def run_kernel_approx(config: ExperimentConfig) -> list:
    """Gram error of every (sampler, R, d, seed) cell, as sorted rows."""
    cells = [
        (
            sampler,
            int(r),
            int(d),
            seed,
            config.n_points,
            config.lengthscale,
            config.svgd_steps,
            config.svgd_step_size,
        )
        for sampler in config.samplers
        for r in config.r_values
        for d in config.dims
        for seed in config.seeds
    ]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(_kernel_cell, cells))
    else:
        rows = [_kernel_cell(cell) for cell in cells]
    return sort_rows(rows)


def resolve_dataset(spec: dict) -> Dataset:
    """Materialize a dataset spec: a CSV on disk or a synthetic draw."""
    extra = set(spec) - _DATASET_KEYS
    if extra:
        raise ConfigurationError(f"dataset {spec.get('name')!r}: unknown keys {sorted(extra)}")
    if "path" in spec:
        data = load_csv(spec["path"], spec["target"])
        return Dataset(
            name=spec["name"],
            x=data.x,
            y=data.y,
            feature_names=data.feature_names,
            target_name=data.target_name,
        )
    return synthetic_ssgp_dataset(
        name=spec["name"],
        n=int(spec["n"]),
        dim=int(spec["dim"]),
        seed=int(spec.get("seed", 0)),
        r_true=int(spec.get("r_true", 128)),
        noise_std=float(spec.get("noise_std", 0.2)),
        lengthscale=float(spec.get("lengthscale", 1.0)),
    )


def _ceil_cbrt(value: int) -> int:
    """Smallest integer k with k^3 >= value, exact for integer input."""
    k = max(1, round(value ** (1.0 / 3.0)))
    while k**3 < value:
        k += 1
    while (k - 1) ** 3 >= value and k > 1:
        k -= 1
    return k


def _carve_validation(split, fraction):
    """Split the (already shuffled) train side into train and validation."""
    n_train = split.y_train.shape[0]
    n_val = int(np.floor(fraction * n_train))
    n_val = max(1, min(n_val, n_train - 1))
    return (
        split.x_train[:, : n_train - n_val],
        split.y_train[: n_train - n_val],
        split.x_train[:, n_train - n_val:],
        split.y_train[n_train - n_val:],
    )


_METHOD_INDEX = {name: i for i, name in enumerate(REGRESSION_METHODS)}


def _train_method(method, x_tr, y_tr, x_val, y_val, config, seed):
    """Fit one method; returns (predict_fn, noise_variance).

    predict_fn(x_test) -> (mean, cov) in standardized units. When tuning
    is on, hyperparameters are selected by validation RMSE over the
    method's small grid; the model trained on the reduced train set is
    used as-is for test prediction.
    """
    tune = config.tune and x_val is not None
    lengthscale = median_input_lengthscale(x_tr)
    init_seed = np.random.SeedSequence([3, seed, _METHOD_INDEX[method]])

    def ssgp_fit(r, train_config, ls, kernelized=False):
        model = initial_ssgp(x_tr, y_tr, r, init_seed, lengthscale=ls)
        trainer = train_ssgp_svgd if kernelized else train_ssgp_mle
        return trainer(x_tr, y_tr, model, train_config)[0]

    base = TrainConfig(
        step_size=config.step_size,
        iterations=config.iterations,
        entropy_weight=config.entropy_weight,
        optimizer=config.optimizer,
        learn_noise=config.learn_noise,
    )

    def validated(fits):
        """Pick the fitted model with the lowest validation RMSE."""
        best = None
        for model in fits:
            mean, _ = ssgp_predict(model, x_tr, y_tr, x_val)
            score = rmse(mean, y_val)
            if best is None or score < best[0]:
                best = (score, model)
        return best[1]

    if method == "ssgp-rbf":
        # noise-only descent converges quickly; no need for the full budget
        noise_only = replace(base, learn_frequencies=False, learn_noise=True,
                             optimizer="plain", iterations=min(config.iterations, 50))
        grid = [0.5 * lengthscale, lengthscale, 2.0 * lengthscale] if tune else [lengthscale]
        fits = [ssgp_fit(config.r, noise_only, ls) for ls in grid]
        model = validated(fits) if tune else fits[0]
    elif method in ("ssgp", "ssgp-rstar"):
        r = config.r if method == "ssgp" else _ceil_cbrt(config.m * config.r**3)
        grid = [0.5 * config.step_size, config.step_size, 2.0 * config.step_size] if tune else [config.step_size]
        fits = [ssgp_fit(r, replace(base, step_size=eps), lengthscale) for eps in grid]
        model = validated(fits) if tune else fits[0]
    elif method == "ssgp-svgd":
        grid = [0.1, 1.0, 10.0] if tune else [config.entropy_weight]
        fits = [ssgp_fit(config.r, replace(base, entropy_weight=eta), lengthscale, kernelized=True)
                for eta in grid]
        model = validated(fits) if tune else fits[0]
    elif method == "msrfr":
        mixture = initial_mixture(
            x_tr, y_tr, config.r, config.m, seed=[3, seed, _METHOD_INDEX[method]],
            temperature=config.alpha, prior_scale=config.prior_scale,
            lengthscale=lengthscale,
        )
        m_config = MsrfrTrainConfig(
            step_size=config.step_size,
            iterations=config.iterations,
            learn_noise=config.learn_noise,
            learn_alpha=tune,
            optimizer=config.optimizer,
        )
        trained, _ = train_msrfr(x_tr, y_tr, mixture, m_config, x_val, y_val)
        return (lambda xs: msrfr_predict(trained, x_tr, y_tr, xs)), trained.noise_variance
    else:
        raise ConfigurationError(f"unknown method {method!r}")

    return (lambda xs: ssgp_predict(model, x_tr, y_tr, xs)), model.noise_variance


def _regression_cell(params):
    spec, method, seed, config = params
    data = resolve_dataset(spec)
    row = {
        "method": method,
        "dataset": data.name,
        "seed": seed,
        "rmse": math.nan,
        "nlpd": math.nan,
        "wall_time": 0.0,
        "dim": data.dim,
        "status": "ok",
    }
    try:
        split = split_standardize(data, config.train_fraction, seed)
        needs_val = config.tune
        if needs_val:
            x_tr, y_tr, x_val, y_val = _carve_validation(split, config.validation_fraction)
        else:
            x_tr, y_tr, x_val, y_val = split.x_train, split.y_train, None, None

        start = time.perf_counter()
        predict, noise_variance = _train_method(
            method, x_tr, y_tr, x_val, y_val, config, seed
        )
        mean_std, cov_std = predict(split.x_test)
        elapsed = time.perf_counter() - start

        scaler = split.scaler
        y_test = scaler.inverse_mean(split.y_test)
        mean = scaler.inverse_mean(mean_std)
        var_diag = scaler.inverse_variance(np.diag(cov_std))
        noise = scaler.inverse_variance(np.asarray(noise_variance)).item()
        row["rmse"] = rmse(mean, y_test)
        row["nlpd"] = nlpd(mean, var_diag, noise, y_test)
        row["wall_time"] = elapsed if config.timing else 0.0
    except _FAILURES as err:
        row["status"] = f"failed: {type(err).__name__}"
    return row


def run_regression(config: ExperimentConfig) -> list:
    """RMSE/NLPD of every (dataset, method, seed) cell, as sorted rows.

    A diverged cell becomes a row with NaN metrics and a failure status;
    the run continues. Metrics are in original target units; wall_time is
    zeroed when timing is off so reports stay byte-reproducible.
    """
    for spec in config.datasets:
        resolve_dataset(spec)  # fail fast on bad specs and missing files
    cells = [
        (spec, method, seed, config)
        for spec in config.datasets
        for method in config.methods
        for seed in config.seeds
    ]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(_regression_cell, cells))
    else:
        rows = [_regression_cell(cell) for cell in cells]
    return sort_rows(rows)
