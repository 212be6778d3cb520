"""Spectral densities, frequency samplers, and random Fourier features.

Conventions used throughout the package: an input matrix X is d x N with
one column per point; a frequency matrix is R x d with one frequency per
row; the feature matrix Phi(X) is 2R x N with interleaved cosine/sine rows
scaled by 1/sqrt(R), so Phi(x)^T Phi(x') estimates the kernel k(x - x').

The stationary kernel is the ARD RBF

    k(delta) = exp(-sum_j delta_j^2 / (2 l_j^2))

whose spectral measure is N(0, diag(l)^{-2}). No 2*pi factors appear in
either convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import (
    ConfigurationError,
    NumericalDivergenceError,
    UnsupportedDimensionError,
)
from .svgd import SteinKernelConfig, svgd_step

# First 32 primes, the Halton bases; dimensions beyond this are rejected.
_PRIMES = (
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
    59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131,
)


@dataclass(frozen=True)
class GaussianSpectralDensity:
    """Spectral density of the ARD RBF kernel: N(0, diag(lengthscales)^{-2})."""

    lengthscales: np.ndarray

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if ls.ndim != 1:
            raise ConfigurationError("lengthscales must be a vector")
        if not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise ConfigurationError(f"lengthscales must be positive, got {ls}")
        object.__setattr__(self, "lengthscales", ls)

    @property
    def dim(self) -> int:
        return self.lengthscales.shape[0]


def spectral_score(density: GaussianSpectralDensity, omega: np.ndarray) -> np.ndarray:
    """Score grad log pi(omega) of the spectral density.

    For the Gaussian density with variance l_j^{-2} per coordinate this is
    -omega_j * l_j^2. Accepts a single frequency (d,) or a stack (R, d) and
    vectorizes over rows.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape[-1] != density.dim:
        raise ConfigurationError(
            f"frequency dim {omega.shape[-1]} != density dim {density.dim}"
        )
    return -omega * density.lengthscales**2


def halton(count: int, dim: int) -> np.ndarray:
    """Unscrambled Halton points in (0,1)^dim, index starting at 1.

    Base for coordinate j is the j-th prime. Only the first 32 primes are
    tabled; higher dimensions are rejected rather than silently degraded.
    """
    if dim > len(_PRIMES):
        raise UnsupportedDimensionError(
            f"Halton bases tabled up to dim {len(_PRIMES)}, got {dim}"
        )
    if count < 1 or dim < 1:
        raise ConfigurationError("count and dim must be at least 1")
    indices = np.arange(1, count + 1, dtype=np.int64)
    out = np.empty((count, dim), dtype=float)
    for j in range(dim):
        base = _PRIMES[j]
        remaining = indices.copy()
        value = np.zeros(count, dtype=float)
        f = 1.0 / base
        while remaining.any():
            value += f * (remaining % base)
            remaining //= base
            f /= base
        out[:, j] = value
    return out


# Rational approximation of the inverse standard-normal CDF (central region
# and tail pieces), followed by one Halley correction that uses the erfc-based
# forward CDF. The raw approximation is within ~1.2e-9 everywhere; the
# correction brings it near machine precision.
_INC_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_INC_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_INC_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_INC_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)


def inverse_normal_cdf(p):
    """Inverse standard-normal CDF for p in (0,1), vectorized."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ConfigurationError("inverse normal CDF requires p strictly in (0,1)")
    a, b, c, d = _INC_A, _INC_B, _INC_C, _INC_D
    x = np.empty_like(p)

    low = p < 0.02425
    high = p > 1.0 - 0.02425
    mid = ~(low | high)

    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]
        den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        x[mid] = num * q / den
    if np.any(low):
        q = np.sqrt(-2.0 * np.log(p[low]))
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        x[low] = num / den
    if np.any(high):
        q = np.sqrt(-2.0 * np.log(1.0 - p[high]))
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        x[high] = -num / den

    # Halley refinement: e is the CDF error at x
    e = 0.5 * erfc(-x / np.sqrt(2.0)) - p
    u = e * np.sqrt(2.0 * np.pi) * np.exp(x * x / 2.0)
    x = x - u / (1.0 + x * u / 2.0)
    return x


def _check_r(r: int):
    if r < 1:
        raise ConfigurationError(f"number of frequencies must be >= 1, got {r}")


def sample_mc(density: GaussianSpectralDensity, r: int, seed) -> np.ndarray:
    """R iid frequencies from the spectral density, deterministic in seed."""
    _check_r(r)
    rng = np.random.default_rng(seed)
    return rng.standard_normal((r, density.dim)) / density.lengthscales


def sample_qmc(density: GaussianSpectralDensity, r: int) -> np.ndarray:
    """R low-discrepancy frequencies: Halton points through the inverse CDF."""
    _check_r(r)
    points = halton(r, density.dim)
    return inverse_normal_cdf(points) / density.lengthscales


def sample_orf(density: GaussianSpectralDensity, r: int, seed) -> np.ndarray:
    """R frequencies with orthogonal d-row blocks.

    Each block is the Q factor of a d x d Gaussian matrix, its rows scaled
    by independent chi-distributed lengths with d degrees of freedom so the
    row norms match iid Gaussian draws; per-dimension lengthscale division
    is applied last. Surplus rows of the final block are dropped.
    """
    _check_r(r)
    rng = np.random.default_rng(seed)
    d = density.dim
    blocks = []
    for _ in range((r + d - 1) // d):
        gauss = rng.standard_normal((d, d))
        q, upper = np.linalg.qr(gauss)
        # Householder QR fixes column signs deterministically; flip them by
        # the sign of R's diagonal so Q is uniform over rotations.
        q = q * np.where(np.diag(upper) >= 0, 1.0, -1.0)
        lengths = np.sqrt(rng.chisquare(d, size=d))
        blocks.append(lengths[:, None] * q)
    stacked = np.vstack(blocks)[:r]
    return stacked / density.lengthscales


def sample_svgd(
    density: GaussianSpectralDensity,
    r: int,
    seed,
    steps: int = 500,
    step_size: float = 0.05,
    config: SteinKernelConfig = SteinKernelConfig(),
) -> np.ndarray:
    """R frequencies from SVGD on the spectral density.

    Particles start at Monte Carlo draws and follow `steps` kernelized
    score-ascent updates, ending spread more evenly over the density than
    the initial sample.
    """
    _check_r(r)
    omega = sample_mc(density, r, seed)
    for t in range(steps):
        omega = svgd_step(omega, spectral_score(density, omega), step_size, config)
        if not np.all(np.isfinite(omega)):
            raise NumericalDivergenceError(
                f"SVGD sampler diverged at iteration {t + 1}", iteration=t + 1
            )
    return omega


def rff_features(x: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Feature matrix Phi(X), shape 2R x N.

    Row 2r is cos(omega_r . x)/sqrt(R) and row 2r+1 is sin(omega_r . x)/sqrt(R),
    so each column has unit norm and Phi^T Phi estimates the kernel Gram.
    """
    x = np.asarray(x, dtype=float)
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    if x.ndim != 2:
        raise ConfigurationError("X must be d x N with one column per point")
    if omega.shape[1] != x.shape[0]:
        raise ConfigurationError(
            f"frequency dim {omega.shape[1]} != input dim {x.shape[0]}"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(omega))):
        raise ConfigurationError("inputs and frequencies must be finite")
    r = omega.shape[0]
    proj = omega @ x
    phi = np.empty((2 * r, x.shape[1]), dtype=float)
    scale = 1.0 / np.sqrt(r)
    phi[0::2] = np.cos(proj) * scale
    phi[1::2] = np.sin(proj) * scale
    return phi


def rff_gram(x: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Approximate Gram matrix Phi(X)^T Phi(X), shape N x N."""
    phi = rff_features(x, omega)
    return phi.T @ phi
