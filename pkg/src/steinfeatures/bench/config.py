"""Experiment configuration: a flat JSON object per experiment."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

from ..errors import ConfigurationError

KERNEL_SAMPLERS = ("mc", "qmc", "orf", "svgd", "nystrom")
REGRESSION_METHODS = ("ssgp-rbf", "ssgp", "ssgp-rstar", "ssgp-svgd", "msrfr")


@dataclass
class ExperimentConfig:
    """Settings for one benchmark run.

    The same type backs both experiments; kernel-approx ignores the
    regression fields and vice versa. Every field maps to a JSON key of
    the same name.
    """

    experiment: str = "kernel-approx"
    output: str = "report.csv"
    format: str = "csv"
    seeds: list = field(default_factory=lambda: [0])
    threads: int = 1

    # kernel-approx
    samplers: list = field(default_factory=lambda: list(KERNEL_SAMPLERS))
    r_values: list = field(default_factory=lambda: [64, 128, 256, 512])
    dims: list = field(default_factory=lambda: [2])
    n_points: int = 200
    lengthscale: float = 1.0
    svgd_steps: int = 500
    svgd_step_size: float = 0.05

    # regression
    datasets: list = field(default_factory=list)
    methods: list = field(default_factory=lambda: list(REGRESSION_METHODS))
    r: int = 50
    m: int = 4
    train_fraction: float = 0.9
    validation_fraction: float = 0.1
    iterations: int = 150
    step_size: float = 0.1
    optimizer: str = "adagrad"
    entropy_weight: float = 1.0
    alpha: float = 1.0
    prior_scale: float = 10.0
    learn_noise: bool = True
    tune: bool = False
    timing: bool = True

    def __post_init__(self):
        if self.experiment not in ("kernel-approx", "regression"):
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        if self.format not in ("csv", "json"):
            raise ConfigurationError(f"format must be csv or json, got {self.format!r}")
        if not self.seeds:
            raise ConfigurationError("seeds must be a non-empty list")
        self.seeds = [int(s) for s in self.seeds]
        if self.threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {self.threads}")
        for s in self.samplers:
            if s not in KERNEL_SAMPLERS:
                raise ConfigurationError(
                    f"unknown sampler {s!r}; expected one of {KERNEL_SAMPLERS}"
                )
        for m in self.methods:
            if m not in REGRESSION_METHODS:
                raise ConfigurationError(
                    f"unknown method {m!r}; expected one of {REGRESSION_METHODS}"
                )
        if any(rv < 1 for rv in self.r_values) or self.r < 1 or self.m < 1:
            raise ConfigurationError("feature and component counts must be >= 1")
        for name in ("train_fraction", "validation_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigurationError(f"{name} must be in (0,1), got {value}")
        if self.experiment == "regression" and not self.datasets:
            raise ConfigurationError("regression config needs at least one dataset")
        for spec in self.datasets:
            if not isinstance(spec, dict) or "name" not in spec:
                raise ConfigurationError(
                    f"dataset entries need at least a name, got {spec!r}"
                )
            if "path" in spec:
                if "target" not in spec:
                    raise ConfigurationError(
                        f"dataset {spec['name']!r} has a path but no target column"
                    )
            elif "n" not in spec or "dim" not in spec:
                raise ConfigurationError(
                    f"dataset {spec['name']!r} needs either path+target or n+dim"
                )


def load_config(path: str) -> ExperimentConfig:
    """Parse a flat JSON config file; unknown keys are errors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"{path}: invalid JSON ({err})") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigurationError(f"{path}: unknown config keys {unknown}")
    return ExperimentConfig(**raw)
