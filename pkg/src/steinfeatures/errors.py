"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised for invalid model or experiment configuration."""


class UnsupportedDimensionError(ConfigurationError):
    """Raised when an input dimension exceeds what a method supports."""


class NumericalDivergenceError(RuntimeError):
    """Raised when an iterative update produces non-finite values.

    Carries the iteration index (and component index, where applicable)
    so a failed run can be located in logs.
    """

    def __init__(self, message, iteration=None, component=None):
        super().__init__(message)
        self.iteration = iteration
        self.component = component


class IllConditionedKernelError(RuntimeError):
    """Raised when a kernel matrix stays non-factorizable after jitter escalation."""


class OptimizationFailureError(RuntimeError):
    """Raised when a descent step cannot be found; carries the objective trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class DatasetError(ValueError):
    """Raised for unreadable, malformed, or empty dataset files."""
