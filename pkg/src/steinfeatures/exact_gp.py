"""Dense Gaussian process regression and low-rank Gram references.

This module is the ground truth the feature-space models are checked
against: an O(N^3) GP with the ARD RBF kernel, plus a Nystrom Gram
approximation and the relative Frobenius error used to score any
approximate Gram.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import ConfigurationError, IllConditionedKernelError

# Relative jitter ladder tried after a failed Cholesky, scaled by mean(diag).
_JITTER_STEPS = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


def chol_spd(matrix: np.ndarray):
    """Cholesky factorization with escalating jitter.

    Tries the matrix as given, then adds jitter proportional to the mean
    diagonal, escalating tenfold from 1e-8 to 1e-4 before giving up.
    Returns the (factor, lower) pair used by scipy's cho_solve.
    """
    try:
        return cho_factor(matrix, lower=True)
    except LinAlgError:
        pass
    mean_diag = float(np.mean(np.diag(matrix)))
    eye = np.eye(matrix.shape[0])
    for scale in _JITTER_STEPS:
        try:
            return cho_factor(matrix + scale * mean_diag * eye, lower=True)
        except LinAlgError:
            continue
    raise IllConditionedKernelError(
        f"Cholesky failed after jitter up to {_JITTER_STEPS[-1]} * mean(diag)"
    )


def exact_gram(
    x1: np.ndarray, x2: np.ndarray | None = None, lengthscales=1.0
) -> np.ndarray:
    """ARD RBF Gram matrix between the columns of x1 and x2.

    k(delta) = exp(-sum_j delta_j^2 / (2 l_j^2)). x2 defaults to x1.
    """
    x1 = np.asarray(x1, dtype=float)
    if x1.ndim != 2:
        raise ConfigurationError("inputs must be d x N with one column per point")
    x2 = x1 if x2 is None else np.asarray(x2, dtype=float)
    ls = np.atleast_1d(np.asarray(lengthscales, dtype=float))
    if np.any(ls <= 0) or not np.all(np.isfinite(ls)):
        raise ConfigurationError(f"lengthscales must be positive, got {ls}")
    if ls.shape[0] == 1:
        ls = np.full(x1.shape[0], ls[0])
    if ls.shape[0] != x1.shape[0]:
        raise ConfigurationError(
            f"lengthscale count {ls.shape[0]} != input dim {x1.shape[0]}"
        )
    a = (x1 / ls[:, None]).T
    b = (x2 / ls[:, None]).T
    sq = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-0.5 * sq)


@dataclass(frozen=True)
class DenseGp:
    """Exact GP regressor: training inputs x (d x N), targets y (N,)."""

    x: np.ndarray
    y: np.ndarray
    lengthscales: np.ndarray
    noise_variance: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim != 2 or x.shape[1] != y.shape[0]:
            raise ConfigurationError(
                f"x must be d x N matching y; got {x.shape} and {y.shape}"
            )
        if not self.noise_variance > 0:
            raise ConfigurationError(
                f"noise variance must be positive, got {self.noise_variance}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def gp_predict_gram(
    kxx: np.ndarray,
    ksx: np.ndarray,
    kss: np.ndarray,
    noise_variance: float,
    y: np.ndarray,
):
    """Posterior mean and covariance from precomputed Gram blocks.

    kxx is train-train (N x N), ksx test-train (N* x N), kss test-test.
    """
    n = kxx.shape[0]
    cho = chol_spd(kxx + noise_variance * np.eye(n))
    alpha = cho_solve(cho, y)
    mean = ksx @ alpha
    solved = cho_solve(cho, ksx.T)
    cov = kss - ksx @ solved
    return mean, 0.5 * (cov + cov.T)


def gp_nll_gram(kxx: np.ndarray, noise_variance: float, y: np.ndarray) -> float:
    """Negative log marginal likelihood from a precomputed train Gram."""
    n = kxx.shape[0]
    cho = chol_spd(kxx + noise_variance * np.eye(n))
    alpha = cho_solve(cho, y)
    half_logdet = float(np.sum(np.log(np.diag(cho[0]))))
    return half_logdet + 0.5 * float(y @ alpha) + 0.5 * n * np.log(2.0 * np.pi)


def gp_predict(model: DenseGp, xs: np.ndarray):
    """Posterior mean (N*,) and covariance (N* x N*) at test columns xs."""
    xs = np.asarray(xs, dtype=float)
    kxx = exact_gram(model.x, lengthscales=model.lengthscales)
    ksx = exact_gram(xs, model.x, lengthscales=model.lengthscales)
    kss = exact_gram(xs, lengthscales=model.lengthscales)
    return gp_predict_gram(kxx, ksx, kss, model.noise_variance, model.y)


def gp_nll(model: DenseGp) -> float:
    """Negative log marginal likelihood of the training data."""
    kxx = exact_gram(model.x, lengthscales=model.lengthscales)
    return gp_nll_gram(kxx, model.noise_variance, model.y)


def nystrom_gram(
    x: np.ndarray, lengthscales, landmarks: int, seed
) -> np.ndarray:
    """Nystrom Gram approximation K_nm K_mm^+ K_mn with uniform landmarks.

    Landmarks are drawn without replacement from the columns of x; the
    pseudo-inverse truncates eigenvalues at 1e-10.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    if not 1 <= landmarks <= n:
        raise ConfigurationError(
            f"landmark count must be in [1, {n}], got {landmarks}"
        )
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=landmarks, replace=False)
    xm = x[:, idx]
    knm = exact_gram(x, xm, lengthscales=lengthscales)
    kmm = exact_gram(xm, lengthscales=lengthscales)
    vals, vecs = np.linalg.eigh(kmm)
    keep = vals > 1e-10
    # K_nm U diag(1/l) U^T K_mn, written as (K_nm U / sqrt(l)) times its
    # transpose: per-mode factors stay O(1), where the explicit
    # pseudo-inverse (norm up to 1/l_min) loses ~7 digits to cancellation.
    half = (knm @ vecs[:, keep]) / np.sqrt(vals[keep])
    return half @ half.T


def gram_error(k: np.ndarray, k_hat: np.ndarray) -> float:
    """Relative Frobenius error ||K - K_hat||_F / ||K||_F."""
    k = np.asarray(k, dtype=float)
    k_hat = np.asarray(k_hat, dtype=float)
    if k.shape != k_hat.shape:
        raise ConfigurationError(f"shape mismatch: {k.shape} vs {k_hat.shape}")
    denom = float(np.linalg.norm(k))
    if denom == 0.0:
        raise ConfigurationError("reference Gram has zero Frobenius norm")
    return float(np.linalg.norm(k - k_hat)) / denom
