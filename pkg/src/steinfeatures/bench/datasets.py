"""Dataset loading, splitting, and standardization for the benchmarks."""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import DatasetError
from ..spectral import GaussianSpectralDensity, rff_features, sample_mc


@dataclass(frozen=True)
class Dataset:
    """A named regression table: x is d x N, y is (N,)."""

    name: str
    x: np.ndarray
    y: np.ndarray
    feature_names: tuple
    target_name: str

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class Scaler:
    """Per-feature and target affine standardization fitted on train data.

    kept holds the indices of the original feature rows that survived the
    constant-column drop.
    """

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    kept: tuple

    def transform_x(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x[list(self.kept), :] - self.x_mean[:, None]) / self.x_scale[:, None]

    def transform_y(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_scale

    def inverse_mean(self, mean: np.ndarray) -> np.ndarray:
        return np.asarray(mean, dtype=float) * self.y_scale + self.y_mean

    def inverse_variance(self, variance: np.ndarray) -> np.ndarray:
        return np.asarray(variance, dtype=float) * self.y_scale**2


@dataclass(frozen=True)
class Split:
    """Standardized train/test split plus the scaler that produced it."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    scaler: Scaler


def load_csv(path: str, target: str) -> Dataset:
    """Read a numeric CSV with a header row.

    Features are all non-target columns in header order. Rows containing
    any non-numeric cell are rejected with a warning naming their file
    line numbers; a file yielding no usable rows is an error.
    """
    if not os.path.exists(path):
        raise DatasetError(f"dataset file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if target not in header:
            raise DatasetError(
                f"{path}: target column {target!r} not in header {header}"
            )
        t_idx = header.index(target)
        feature_names = tuple(h for i, h in enumerate(header) if i != t_idx)
        rows = []
        bad_lines = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                bad_lines.append(line_no)
                continue
            if len(values) != len(header):
                bad_lines.append(line_no)
                continue
            rows.append(values)
    if bad_lines:
        shown = ", ".join(str(b) for b in bad_lines[:20])
        more = "" if len(bad_lines) <= 20 else f" (+{len(bad_lines) - 20} more)"
        warnings.warn(f"{path}: rejected non-numeric rows at lines {shown}{more}")
    if not rows:
        raise DatasetError(f"{path}: no numeric rows")
    table = np.asarray(rows, dtype=float)
    y = table[:, t_idx]
    x = np.delete(table, t_idx, axis=1).T
    name = os.path.splitext(os.path.basename(path))[0]
    return Dataset(name=name, x=x, y=y, feature_names=feature_names, target_name=target)


def load_features(path: str, feature_names) -> np.ndarray:
    """Read the named feature columns from a CSV, as d x N.

    Used by prediction, where the target column may be absent and extra
    columns are ignored. Non-numeric rows are rejected as in load_csv.
    """
    if not os.path.exists(path):
        raise DatasetError(f"dataset file not found: {path}")
    feature_names = list(feature_names)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        missing = [f for f in feature_names if f not in header]
        if missing:
            raise DatasetError(f"{path}: missing feature columns {missing}")
        idx = [header.index(f) for f in feature_names]
        rows = []
        bad_lines = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(row[i]) for i in idx])
            except (ValueError, IndexError):
                bad_lines.append(line_no)
    if bad_lines:
        shown = ", ".join(str(b) for b in bad_lines[:20])
        warnings.warn(f"{path}: rejected non-numeric rows at lines {shown}")
    if not rows:
        raise DatasetError(f"{path}: no numeric rows")
    return np.asarray(rows, dtype=float).T


def fit_scaler(x: np.ndarray, y: np.ndarray, name: str = "data") -> Scaler:
    """Standardization statistics over a whole table (no split).

    Constant feature rows are dropped with a warning, as in
    split_standardize; a constant target is an error.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    x_mean = x.mean(axis=1)
    x_std = x.std(axis=1)
    kept = tuple(int(i) for i in np.nonzero(x_std > 0)[0])
    if len(kept) < x.shape[0]:
        dropped = sorted(set(range(x.shape[0])) - set(kept))
        warnings.warn(f"{name}: dropping constant feature rows {dropped}")
    if not kept:
        raise DatasetError(f"{name}: all feature columns constant")
    y_scale = float(y.std())
    if y_scale == 0.0:
        raise DatasetError(f"{name}: constant target")
    return Scaler(
        x_mean=x_mean[list(kept)],
        x_scale=x_std[list(kept)],
        y_mean=float(y.mean()),
        y_scale=y_scale,
        kept=kept,
    )


def split_standardize(data: Dataset, fraction: float, seed: int) -> Split:
    """Seeded uniform split, standardized with train statistics only.

    The train side takes floor(fraction * N) points. Feature rows that are
    constant on the train side are dropped with a warning; a constant
    target is an error. Test features and targets are transformed with the
    train scaler, never their own statistics.
    """
    if not 0.0 < fraction < 1.0:
        raise DatasetError(f"train fraction must be in (0,1), got {fraction}")
    n = data.n
    n_train = int(np.floor(fraction * n))
    if n_train < 1 or n_train >= n:
        raise DatasetError(
            f"fraction {fraction} leaves an empty split for N={n}"
        )
    perm = np.random.default_rng(seed).permutation(n)
    train_idx, test_idx = perm[:n_train], perm[n_train:]

    x_train_raw = data.x[:, train_idx]
    x_mean = x_train_raw.mean(axis=1)
    x_std = x_train_raw.std(axis=1)
    kept = tuple(int(i) for i in np.nonzero(x_std > 0)[0])
    dropped = [data.feature_names[i] for i in range(data.dim) if i not in kept]
    if dropped:
        warnings.warn(f"{data.name}: dropping constant feature columns {dropped}")
    if not kept:
        raise DatasetError(f"{data.name}: all feature columns constant")

    y_train_raw = data.y[train_idx]
    y_mean = float(y_train_raw.mean())
    y_scale = float(y_train_raw.std())
    if y_scale == 0.0:
        raise DatasetError(f"{data.name}: constant target on the train split")

    scaler = Scaler(
        x_mean=x_mean[list(kept)],
        x_scale=x_std[list(kept)],
        y_mean=y_mean,
        y_scale=y_scale,
        kept=kept,
    )
    return Split(
        x_train=scaler.transform_x(data.x[:, train_idx]),
        y_train=scaler.transform_y(data.y[train_idx]),
        x_test=scaler.transform_x(data.x[:, test_idx]),
        y_test=scaler.transform_y(data.y[test_idx]),
        scaler=scaler,
    )


def synthetic_ssgp_dataset(
    name: str,
    n: int,
    dim: int,
    seed: int,
    r_true: int = 128,
    noise_std: float = 0.2,
    lengthscale: float = 1.0,
) -> Dataset:
    """Regression table drawn from a sparse-spectrum GP prior.

    Inputs are standard normal; the latent function is a random Fourier
    expansion with r_true frequencies and unit marginal variance, observed
    under Gaussian noise.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, dim]))
    x = rng.standard_normal((dim, n))
    density = GaussianSpectralDensity(np.full(dim, float(lengthscale)))
    omega = sample_mc(density, r_true, rng.integers(0, 2**32))
    weights = rng.standard_normal(2 * r_true)
    f = rff_features(x, omega).T @ weights
    y = f + noise_std * rng.standard_normal(n)
    features = tuple(f"x{i}" for i in range(dim))
    return Dataset(name=name, x=x, y=y, feature_names=features, target_name="y")
