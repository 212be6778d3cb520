"""Sparse-spectrum GP regression in random Fourier feature space.

The model keeps R trainable frequencies and a noise variance. All train
and predict costs go through A = Phi Phi^T + sigma^2 I, a 2R x 2R matrix,
so nothing here scales cubically with the number of data points. The
marginal likelihood below is algebraically identical to the dense GP
applied to the Gram Phi^T Phi; the equivalence is enforced by tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_solve

from .errors import (
    ConfigurationError,
    NumericalDivergenceError,
    OptimizationFailureError,
)
from .exact_gp import chol_spd
from .spectral import GaussianSpectralDensity, rff_features, sample_mc
from .svgd import AdaGradScaler, SteinKernelConfig, matrix_kernel_grad, resolve_bandwidth


@dataclass(frozen=True)
class SsgpModel:
    """Frequencies omega (R x d) and observation noise variance."""

    omega: np.ndarray
    noise_variance: float

    def __post_init__(self):
        omega = np.atleast_2d(np.asarray(self.omega, dtype=float))
        if not np.all(np.isfinite(omega)):
            raise ConfigurationError("frequencies must be finite")
        if not self.noise_variance > 0:
            raise ConfigurationError(
                f"noise variance must be positive, got {self.noise_variance}"
            )
        object.__setattr__(self, "omega", omega)

    @property
    def r(self) -> int:
        return self.omega.shape[0]

    @property
    def dim(self) -> int:
        return self.omega.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Settings shared by the frequency trainers.

    entropy_weight only affects the kernelized trainer; learn_frequencies
    exists for baselines that keep Monte Carlo frequencies fixed and fit
    the noise alone.
    """

    step_size: float = 0.05
    iterations: int = 100
    entropy_weight: float = 1.0
    optimizer: str = "plain"
    learn_noise: bool = True
    learn_frequencies: bool = True
    kernel: SteinKernelConfig = field(default_factory=SteinKernelConfig)

    def __post_init__(self):
        if not self.step_size > 0:
            raise ConfigurationError(f"step size must be positive, got {self.step_size}")
        if self.iterations < 1:
            raise ConfigurationError(f"iterations must be >= 1, got {self.iterations}")
        if self.entropy_weight < 0:
            raise ConfigurationError(
                f"entropy weight must be >= 0, got {self.entropy_weight}"
            )
        if self.optimizer not in ("plain", "adagrad"):
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")
        if not (self.learn_frequencies or self.learn_noise):
            raise ConfigurationError("nothing to train: all parameters frozen")


class _Factor(NamedTuple):
    phi: np.ndarray          # 2R x N feature matrix
    cho: tuple               # Cholesky of A = Phi Phi^T + noise I
    b: np.ndarray            # Phi y
    alpha: np.ndarray        # A^{-1} Phi y
    half_logdet: float       # (1/2) log |A|


def _check_xy(model: SsgpModel, x: np.ndarray, y: np.ndarray):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if x.ndim != 2 or x.shape[1] != y.shape[0]:
        raise ConfigurationError(
            f"x must be d x N matching y; got {x.shape} and {y.shape}"
        )
    if x.shape[0] != model.dim:
        raise ConfigurationError(
            f"input dim {x.shape[0]} != frequency dim {model.dim}"
        )
    return x, y


def _factorize(model: SsgpModel, x: np.ndarray, y: np.ndarray) -> _Factor:
    phi = rff_features(x, model.omega)
    a = phi @ phi.T + model.noise_variance * np.eye(2 * model.r)
    cho = chol_spd(a)
    b = phi @ y
    alpha = cho_solve(cho, b)
    half_logdet = float(np.sum(np.log(np.diag(cho[0]))))
    return _Factor(phi, cho, b, alpha, half_logdet)


def ssgp_predict(model: SsgpModel, x: np.ndarray, y: np.ndarray, xs: np.ndarray):
    """Predictive mean (N*,) and covariance (N* x N*) at test columns xs.

    mean = Phi(X*)^T A^{-1} Phi(X) y and cov = sigma^2 Phi(X*)^T A^{-1} Phi(X*),
    both from a single Cholesky of A. The covariance excludes observation
    noise.
    """
    x, y = _check_xy(model, x, y)
    fac = _factorize(model, x, y)
    phis = rff_features(np.asarray(xs, dtype=float), model.omega)
    mean = phis.T @ fac.alpha
    cov = model.noise_variance * (phis.T @ cho_solve(fac.cho, phis))
    return mean, 0.5 * (cov + cov.T)


def _nll_terms(model: SsgpModel, x: np.ndarray, y: np.ndarray, fac: _Factor) -> float:
    n = y.shape[0]
    noise = model.noise_variance
    quad = (float(y @ y) - float(fac.b @ fac.alpha)) / (2.0 * noise)
    return (
        quad
        + fac.half_logdet
        + 0.5 * (n - 2 * model.r) * math.log(noise)
        + 0.5 * n * math.log(2.0 * math.pi)
    )


def ssgp_nll(model: SsgpModel, x: np.ndarray, y: np.ndarray) -> float:
    """Negative log marginal likelihood, evaluated in feature space.

    Uses the determinant and inversion identities that turn the dense
    N x N objective into 2R x 2R work:

        (1/(2 s2)) (y^T y - y^T Phi^T A^{-1} Phi y) + (1/2) log |A|
            + ((N - 2R)/2) log s2 + (N/2) log 2 pi
    """
    x, y = _check_xy(model, x, y)
    return _nll_terms(model, x, y, _factorize(model, x, y))


def ssgp_nll_and_grad(model: SsgpModel, x: np.ndarray, y: np.ndarray):
    """NLL with its gradients, sharing one factorization.

    Returns (nll, grad_omega, grad_log_noise): grad_omega is R x d and
    grad_log_noise is the derivative with respect to log sigma^2.
    """
    x, y = _check_xy(model, x, y)
    fac = _factorize(model, x, y)
    nll = _nll_terms(model, x, y, fac)
    noise = model.noise_variance
    n = y.shape[0]

    # d NLL / d Phi = A^{-1} Phi - (1/s2) alpha r^T with r the train residual
    residual = y - fac.phi.T @ fac.alpha
    g = cho_solve(fac.cho, fac.phi) - np.outer(fac.alpha, residual) / noise
    # chain rule through the interleaved rows: d cos = -x sin, d sin = x cos
    t = -g[0::2] * fac.phi[1::2] + g[1::2] * fac.phi[0::2]
    grad_omega = t @ x.T

    quad = (float(y @ y) - float(fac.b @ fac.alpha)) / (2.0 * noise)
    trace_inv = float(np.trace(cho_solve(fac.cho, np.eye(2 * model.r))))
    d_noise = (
        -quad / noise
        + float(fac.alpha @ fac.alpha) / (2.0 * noise)
        + 0.5 * trace_inv
        + 0.5 * (n - 2 * model.r) / noise
    )
    grad_log_noise = noise * d_noise
    if not (np.all(np.isfinite(grad_omega)) and math.isfinite(grad_log_noise)):
        raise NumericalDivergenceError("non-finite NLL gradient")
    return nll, grad_omega, grad_log_noise


def ssgp_nll_grad(model: SsgpModel, x: np.ndarray, y: np.ndarray):
    """Gradients of the NLL: (grad_omega R x d, grad_log_noise)."""
    _, grad_omega, grad_log_noise = ssgp_nll_and_grad(model, x, y)
    return grad_omega, grad_log_noise


def median_input_lengthscale(x: np.ndarray, max_points: int = 1000, seed: int = 0) -> float:
    """Median pairwise distance between input columns, for initialization.

    Subsamples beyond max_points columns to bound the pair count; falls
    back to 1.0 when all points coincide.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    if n > max_points:
        idx = np.random.default_rng(seed).choice(n, size=max_points, replace=False)
        x = x[:, idx]
        n = max_points
    if n < 2:
        return 1.0
    sq = np.sum(x * x, axis=0)
    dist2 = sq[:, None] + sq[None, :] - 2.0 * x.T @ x
    np.maximum(dist2, 0.0, out=dist2)
    med = float(np.median(np.sqrt(dist2[np.triu_indices(n, k=1)])))
    return med if med > 0 else 1.0


def initial_ssgp(
    x: np.ndarray,
    y: np.ndarray,
    r: int,
    seed,
    lengthscale: float | None = None,
    noise_fraction: float = 0.1,
) -> SsgpModel:
    """Starting model: Monte Carlo frequencies at the median-distance
    lengthscale, noise at noise_fraction of the target variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if lengthscale is None:
        lengthscale = median_input_lengthscale(x)
    density = GaussianSpectralDensity(np.full(x.shape[0], lengthscale))
    var_y = float(np.var(y))
    noise = noise_fraction * var_y if var_y > 0 else noise_fraction
    return SsgpModel(omega=sample_mc(density, r, seed), noise_variance=noise)


# Relative slack when accepting a backtracked step; a step is a descent
# step if it does not increase the NLL beyond float rounding.
_ACCEPT_SLACK = 1e-12

# Log-noise iterates beyond this span would overflow or underflow exp.
_LOG_NOISE_SPAN = 690.0


def _noise_from_log(log_noise: float, step: int) -> float:
    """Exponentiate a log-noise iterate; out-of-range means divergence."""
    if not math.isfinite(log_noise) or abs(log_noise) > _LOG_NOISE_SPAN:
        raise NumericalDivergenceError(
            f"noise update diverged at iteration {step}", iteration=step
        )
    return math.exp(log_noise)


def train_ssgp_mle(
    x: np.ndarray,
    y: np.ndarray,
    init: SsgpModel,
    config: TrainConfig,
):
    """Gradient-descent training of the marginal likelihood.

    Returns (model, trace) where trace holds the NLL before each step and
    after the last. With the plain optimizer every step backtracks (up to
    20 halvings) until the NLL does not increase, so the trace is
    non-increasing; adagrad steps are taken as scaled and may wobble.
    """
    x, y = _check_xy(init, x, y)
    omega = init.omega.copy()
    log_noise = math.log(init.noise_variance)
    scaler = AdaGradScaler() if config.optimizer == "adagrad" else None
    trace = []

    model = init
    for step in range(config.iterations):
        nll, grad_omega, grad_log_noise = ssgp_nll_and_grad(model, x, y)
        trace.append(nll)
        if not config.learn_frequencies:
            grad_omega = np.zeros_like(grad_omega)
        if not config.learn_noise:
            grad_log_noise = 0.0

        if scaler is not None:
            flat = np.concatenate([grad_omega.ravel(), [grad_log_noise]])
            adj = scaler.scale(flat)
            omega = omega - config.step_size * adj[:-1].reshape(omega.shape)
            log_noise = log_noise - config.step_size * adj[-1]
            if not np.all(np.isfinite(omega)):
                raise NumericalDivergenceError(
                    f"training diverged at iteration {step + 1}", iteration=step + 1
                )
            model = SsgpModel(omega, _noise_from_log(log_noise, step + 1))
            continue

        eps = config.step_size
        accepted = False
        for _ in range(21):
            cand_omega = omega - eps * grad_omega
            cand_log_noise = log_noise - eps * grad_log_noise
            if not np.all(np.isfinite(cand_omega)) or abs(cand_log_noise) > _LOG_NOISE_SPAN:
                cand_nll = math.inf
                eps *= 0.5
                continue
            candidate = SsgpModel(cand_omega, math.exp(cand_log_noise))
            cand_nll = ssgp_nll(candidate, x, y)
            if math.isfinite(cand_nll) and cand_nll <= nll + _ACCEPT_SLACK * (1.0 + abs(nll)):
                omega, log_noise, model = cand_omega, cand_log_noise, candidate
                accepted = True
                break
            eps *= 0.5
        if not accepted:
            trace.append(cand_nll)
            raise OptimizationFailureError(
                f"no descent step found at iteration {step + 1} "
                f"after 20 halvings (NLL {nll:.6g})",
                trace=trace,
            )

    trace.append(ssgp_nll(model, x, y))
    return model, trace


def train_ssgp_svgd(
    x: np.ndarray,
    y: np.ndarray,
    init: SsgpModel,
    config: TrainConfig,
):
    """Kernelized likelihood ascent on the frequencies.

    Each frequency moves along a kernel-weighted sum of all per-frequency
    likelihood gradients plus an entropy term that repels frequencies from
    one another:

        w_i <- w_i + eps sum_r [ k(w_i, w_r) grad_r log p(y|Omega)
                                 + (eta/R) grad_{w_r} k(w_i, w_r) ]

    Noise, when learned, follows its own likelihood gradient in log space.
    Returns (model, trace) with the NLL before each step and after the last.
    """
    x, y = _check_xy(init, x, y)
    omega = init.omega.copy()
    log_noise = math.log(init.noise_variance)
    r = init.r
    scaler = AdaGradScaler() if config.optimizer == "adagrad" else None
    trace = []

    model = init
    for step in range(config.iterations):
        nll, grad_omega, grad_log_noise = ssgp_nll_and_grad(model, x, y)
        trace.append(nll)
        h = resolve_bandwidth(config.kernel, omega)
        fixed = SteinKernelConfig(bandwidth=h)
        diff = omega[:, None, :] - omega[None, :, :]
        kern = np.exp(-np.sum(diff * diff, axis=-1) / h)
        drive = kern @ (-grad_omega)
        repulse = (config.entropy_weight / r) * matrix_kernel_grad(omega, omega, fixed)
        direction = drive + repulse
        noise_dir = -grad_log_noise if config.learn_noise else 0.0
        if not config.learn_frequencies:
            direction = np.zeros_like(direction)

        if scaler is not None:
            flat = np.concatenate([direction.ravel(), [noise_dir]])
            adj = scaler.scale(flat)
            omega = omega + config.step_size * adj[:-1].reshape(omega.shape)
            log_noise = log_noise + config.step_size * adj[-1]
        else:
            omega = omega + config.step_size * direction
            log_noise = log_noise + config.step_size * noise_dir

        if not np.all(np.isfinite(omega)):
            raise NumericalDivergenceError(
                f"kernelized training diverged at iteration {step + 1}",
                iteration=step + 1,
            )
        model = SsgpModel(omega, _noise_from_log(log_noise, step + 1))

    trace.append(ssgp_nll(model, x, y))
    return model, trace
