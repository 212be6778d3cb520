"""Independent numerical oracles shared across the test suite.

Everything here is deliberately computed by a different route than the
library code it checks: bisection instead of a rational approximation,
eigendecomposition instead of Cholesky, finite differences instead of
analytic gradients. Keep it that way; an oracle that reuses the code
under test proves nothing.
"""

import math

import numpy as np


def bisect_inverse_normal(p: float, tol: float = 1e-13) -> float:
    """Standard normal quantile by bisection on the erf-based CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if 0.5 * (1.0 + math.erf(mid / math.sqrt(2.0))) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mvn_nll(cov: np.ndarray, y: np.ndarray) -> float:
    """Negative log density of y under N(0, cov), via eigendecomposition."""
    vals, vecs = np.linalg.eigh(np.asarray(cov, dtype=float))
    if np.any(vals <= 0):
        raise ValueError("covariance must be positive definite")
    y = np.asarray(y, dtype=float).ravel()
    z = vecs.T @ y
    return float(
        0.5 * np.sum(np.log(vals))
        + 0.5 * np.sum(z * z / vals)
        + 0.5 * y.size * math.log(2.0 * math.pi)
    )


def central_difference(func, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Elementwise central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        up = x.copy()
        up[idx] += h
        down = x.copy()
        down[idx] -= h
        grad[idx] = (func(up) - func(down)) / (2.0 * h)
    return grad


def scalar_central_difference(func, x0: float, h: float = 1e-6) -> float:
    """Central finite difference of a scalar-to-scalar function."""
    return (func(x0 + h) - func(x0 - h)) / (2.0 * h)
