"""Benchmark harness: datasets, experiment runners, and report emission."""

from .config import ExperimentConfig, load_config
from .datasets import (
    Dataset,
    Scaler,
    Split,
    fit_scaler,
    load_csv,
    load_features,
    split_standardize,
    synthetic_ssgp_dataset,
)
from .experiments import resolve_dataset, run_kernel_approx, run_regression
from .reports import emit_report, load_report, sort_rows
