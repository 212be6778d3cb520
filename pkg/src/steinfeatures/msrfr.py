"""Mixtures of sparse-spectrum GPs trained as interacting particles.

Each mixture component is one R x d frequency matrix; the M components
share a noise variance and move together: every component follows a
kernel-weighted sum of all components' posterior scores plus a repulsion
term scaled by the temperature alpha, so the mixture spreads over distinct
explanations of the data instead of collapsing onto one. Prediction
moment-matches the M component predictives into one Gaussian.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, NumericalDivergenceError
from .spectral import GaussianSpectralDensity, sample_mc
from .ssgp import (
    SsgpModel,
    _noise_from_log,
    median_input_lengthscale,
    ssgp_nll_and_grad,
    ssgp_predict,
)
from .svgd import (
    AdaGradScaler,
    SteinKernelConfig,
    matrix_kernel,
    matrix_kernel_grad,
    median_bandwidth,
)

_FORMAT_NAME = "msrfr-mixture"
_FORMAT_VERSION = 1

ALPHA_GRID = (0.1, 0.5, 1.0, 2.0, 5.0)


@dataclass(frozen=True)
class MixtureModel:
    """M frequency matrices (M x R x d), shared noise, temperature, prior.

    The prior on every frequency row is a zero-mean Gaussian with scale
    prior_scale; temperature scales the repulsion between components
    (0 recovers independent MAP training, 1 the Bayesian update).
    """

    components: np.ndarray
    noise_variance: float
    temperature: float = 1.0
    prior_scale: float = 10.0

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        if comp.ndim != 3:
            raise ConfigurationError(
                f"components must be M x R x d, got shape {comp.shape}"
            )
        if not np.all(np.isfinite(comp)):
            raise ConfigurationError("components must be finite")
        if not self.noise_variance > 0:
            raise ConfigurationError(
                f"noise variance must be positive, got {self.noise_variance}"
            )
        if self.temperature < 0:
            raise ConfigurationError(
                f"temperature must be >= 0, got {self.temperature}"
            )
        if not self.prior_scale > 0:
            raise ConfigurationError(
                f"prior scale must be positive, got {self.prior_scale}"
            )
        object.__setattr__(self, "components", comp)

    @property
    def m(self) -> int:
        return self.components.shape[0]

    @property
    def r(self) -> int:
        return self.components.shape[1]

    @property
    def dim(self) -> int:
        return self.components.shape[2]

    def component(self, m: int) -> SsgpModel:
        return SsgpModel(self.components[m], self.noise_variance)


@dataclass(frozen=True)
class MsrfrTrainConfig:
    """Mixture training settings."""

    step_size: float = 0.05
    iterations: int = 100
    learn_noise: bool = True
    learn_alpha: bool = False
    optimizer: str = "plain"
    kernel: SteinKernelConfig = field(default_factory=SteinKernelConfig)

    def __post_init__(self):
        if not self.step_size > 0:
            raise ConfigurationError(f"step size must be positive, got {self.step_size}")
        if self.iterations < 1:
            raise ConfigurationError(f"iterations must be >= 1, got {self.iterations}")
        if self.optimizer not in ("plain", "adagrad"):
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")


def initial_mixture(
    x: np.ndarray,
    y: np.ndarray,
    r: int,
    m: int,
    seed,
    temperature: float = 1.0,
    prior_scale: float = 10.0,
    lengthscale: float | None = None,
    noise_fraction: float = 0.1,
) -> MixtureModel:
    """Starting mixture: independent Monte Carlo components on distinct
    seed streams, median-distance lengthscale, noise at a fraction of the
    target variance."""
    if m < 1:
        raise ConfigurationError(f"component count must be >= 1, got {m}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if lengthscale is None:
        lengthscale = median_input_lengthscale(x)
    density = GaussianSpectralDensity(np.full(x.shape[0], lengthscale))
    children = np.random.SeedSequence(seed).spawn(m)
    comp = np.stack([sample_mc(density, r, child) for child in children])
    var_y = float(np.var(y))
    noise = noise_fraction * var_y if var_y > 0 else noise_fraction
    return MixtureModel(comp, noise, temperature=temperature, prior_scale=prior_scale)


def _component_grads(model: MixtureModel, x: np.ndarray, y: np.ndarray):
    """Per-component (nll, grad_omega, grad_log_noise) triples."""
    out = []
    for j in range(model.m):
        out.append(ssgp_nll_and_grad(model.component(j), x, y))
    return out


def component_score(model: MixtureModel, m: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Posterior score of component m: grad of log-likelihood plus
    log-prior with respect to the component's frequencies (R x d)."""
    if not 0 <= m < model.m:
        raise ConfigurationError(f"component index {m} out of range [0, {model.m})")
    _, grad_omega, _ = ssgp_nll_and_grad(model.component(m), x, y)
    return -grad_omega - model.components[m] / model.prior_scale**2


def msrfr_step(
    model: MixtureModel,
    x: np.ndarray,
    y: np.ndarray,
    step_size: float,
    kernel: SteinKernelConfig = SteinKernelConfig(),
    scores: list[np.ndarray] | None = None,
) -> MixtureModel:
    """One synchronous mixture update.

    Component m moves by (eps/M) sum_j [ K(O_m, O_j) score_j
    + alpha * grad-of-K(O_m, O_j) ], with every term evaluated at the
    pre-step state. The kernel bandwidth pools the rows of all M
    components so the pairwise kernels are mutually consistent.
    Precomputed posterior scores may be passed to avoid refactorizing.
    """
    comp = model.components
    m_count = model.m
    if scores is None:
        scores = [component_score(model, j, x, y) for j in range(m_count)]
    if kernel.bandwidth == "median":
        h = median_bandwidth(comp.reshape(m_count * model.r, model.dim))
    else:
        h = float(kernel.bandwidth)
    fixed = SteinKernelConfig(bandwidth=h)

    new_components = np.empty_like(comp)
    for m in range(m_count):
        total = np.zeros_like(comp[m])
        for j in range(m_count):
            total += matrix_kernel(comp[m], comp[j], fixed) @ scores[j]
            total += model.temperature * matrix_kernel_grad(comp[m], comp[j], fixed)
        new_components[m] = comp[m] + (step_size / m_count) * total
        if not np.all(np.isfinite(new_components[m])):
            raise NumericalDivergenceError(
                f"component {m} produced non-finite frequencies", component=m
            )
    return replace(model, components=new_components)


def train_msrfr(
    x: np.ndarray,
    y: np.ndarray,
    init: MixtureModel,
    config: MsrfrTrainConfig,
    x_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
):
    """Synchronous mixture training.

    Returns (model, trace); trace holds the mean component NLL before
    each step and after the last. With learn_alpha the temperature is
    chosen from ALPHA_GRID by RMSE on the provided validation split and
    the winning run is returned.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()

    if config.learn_alpha:
        if x_val is None or y_val is None:
            raise ConfigurationError(
                "learn_alpha requires a validation split (x_val, y_val)"
            )
        base = replace(config, learn_alpha=False)
        best = None
        for alpha in ALPHA_GRID:
            candidate = replace(init, temperature=alpha)
            trained, trace = train_msrfr(x, y, candidate, base)
            mean, cov = msrfr_predict(trained, x, y, np.asarray(x_val, dtype=float))
            score = rmse(mean, np.asarray(y_val, dtype=float).ravel())
            if best is None or score < best[0]:
                best = (score, trained, trace)
        return best[1], best[2]

    model = init
    scaler = AdaGradScaler() if config.optimizer == "adagrad" else None
    trace = []
    for step in range(config.iterations):
        grads = _component_grads(model, x, y)
        trace.append(float(np.mean([g[0] for g in grads])))
        scores = [
            -g[1] - model.components[j] / model.prior_scale**2
            for j, g in enumerate(grads)
        ]
        try:
            if scaler is None:
                model = msrfr_step(model, x, y, config.step_size, config.kernel, scores)
            else:
                stepped = msrfr_step(model, x, y, 1.0, config.kernel, scores)
                raw = stepped.components - model.components
                noise_grad = float(np.mean([g[2] for g in grads])) if config.learn_noise else 0.0
                flat = np.concatenate([raw.ravel(), [-noise_grad]])
                adj = scaler.scale(flat)
                new_comp = model.components + config.step_size * adj[:-1].reshape(raw.shape)
                if not np.all(np.isfinite(new_comp)):
                    raise NumericalDivergenceError("non-finite frequencies")
                new_noise = _noise_from_log(
                    math.log(model.noise_variance) + config.step_size * adj[-1],
                    step + 1,
                )
                model = replace(model, components=new_comp, noise_variance=new_noise)
                continue
        except NumericalDivergenceError as err:
            raise NumericalDivergenceError(
                f"mixture training diverged at iteration {step + 1}: {err}",
                iteration=step + 1,
                component=err.component,
            ) from err
        if config.learn_noise:
            noise_grad = float(np.mean([g[2] for g in grads]))
            new_noise = _noise_from_log(
                math.log(model.noise_variance) - config.step_size * noise_grad,
                step + 1,
            )
            model = replace(model, noise_variance=new_noise)

    final = _component_grads(model, x, y)
    trace.append(float(np.mean([g[0] for g in final])))
    return model, trace


def mixture_moments(means, covs):
    """First two moments of an equally weighted Gaussian mixture.

    Returns the mean of the component means and the mean of (component
    covariance plus squared deviation of the component mean).
    """
    if len(means) != len(covs) or not means:
        raise ConfigurationError("means and covariances must pair up")
    mean = np.mean(means, axis=0)
    spread = [np.outer(mu - mean, mu - mean) for mu in means]
    cov = np.mean([c + s for c, s in zip(covs, spread)], axis=0)
    return mean, cov


def msrfr_predict(model: MixtureModel, x: np.ndarray, y: np.ndarray, xs: np.ndarray):
    """Moment-matched mixture prediction.

    The mixture of the M component Gaussians is summarized by its first
    two moments. Covariance excludes observation noise, matching the
    single-model predictive.
    """
    means = []
    covs = []
    for m in range(model.m):
        mean_m, cov_m = ssgp_predict(model.component(m), x, y, xs)
        means.append(mean_m)
        covs.append(cov_m)
    return mixture_moments(means, covs)


def rmse(mean: np.ndarray, y: np.ndarray) -> float:
    """Root mean squared prediction error."""
    mean = np.asarray(mean, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if mean.shape != y.shape:
        raise ConfigurationError(f"shape mismatch: {mean.shape} vs {y.shape}")
    return float(np.sqrt(np.mean((mean - y) ** 2)))


def nlpd(
    mean: np.ndarray,
    variance: np.ndarray,
    noise_variance: float,
    y: np.ndarray,
) -> float:
    """Negative log predictive density of held-out targets.

    variance is the diagonal of the predictive covariance; observation
    noise is added before scoring, so v_i = variance_i + noise_variance.
    """
    mean = np.asarray(mean, dtype=float).ravel()
    variance = np.asarray(variance, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if not (mean.shape == variance.shape == y.shape):
        raise ConfigurationError("mean, variance, and targets must align")
    v = variance + noise_variance
    if np.any(v <= 0):
        raise ConfigurationError("predictive variances must be positive")
    return float(np.sum(0.5 * (np.log(2.0 * np.pi * v) + (y - mean) ** 2 / v)))


def mixture_to_dict(model: MixtureModel) -> dict:
    """Versioned flat container for a mixture; floats survive exactly."""
    return {
        "format": _FORMAT_NAME,
        "version": _FORMAT_VERSION,
        "m": model.m,
        "r": model.r,
        "dim": model.dim,
        "noise_variance": model.noise_variance,
        "temperature": model.temperature,
        "prior_scale": model.prior_scale,
        "components": model.components.ravel(order="C").tolist(),
    }


def mixture_from_dict(payload: dict) -> MixtureModel:
    """Inverse of mixture_to_dict, validating format and version."""
    if not isinstance(payload, dict):
        raise ConfigurationError("mixture payload must be a mapping")
    if payload.get("format") != _FORMAT_NAME:
        raise ConfigurationError(
            f"unrecognized model format {payload.get('format')!r}"
        )
    if payload.get("version") != _FORMAT_VERSION:
        raise ConfigurationError(
            f"unsupported model version {payload.get('version')!r} "
            f"(expected {_FORMAT_VERSION})"
        )
    try:
        m, r, dim = int(payload["m"]), int(payload["r"]), int(payload["dim"])
        flat = np.asarray(payload["components"], dtype=float)
        components = flat.reshape(m, r, dim)
        return MixtureModel(
            components=components,
            noise_variance=float(payload["noise_variance"]),
            temperature=float(payload["temperature"]),
            prior_scale=float(payload["prior_scale"]),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigurationError(f"corrupt mixture payload: {err}") from err


def save_mixture(model: MixtureModel, path: str):
    """Write the mixture container as JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mixture_to_dict(model), fh)
        fh.write("\n")


def load_mixture(path: str) -> MixtureModel:
    """Read a mixture container written by save_mixture."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigurationError(f"corrupt mixture file {path}: {err}") from err
    return mixture_from_dict(payload)
