"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration and input problems exit
with 2, numeric divergence with 3, infeasible generation/certification
with 4.
"""


class ReluprobeError(Exception):
    """Base class for all package errors."""


class ConfigError(ReluprobeError):
    """Invalid configuration (bad field value, odd output width, ...)."""


class InputError(ReluprobeError):
    """Invalid runtime input (dimension mismatch, empty dataset, ...)."""


class NumericError(ReluprobeError):
    """Non-finite values or failed numerical routine (e.g. power iteration)."""


class ConsistencyError(ReluprobeError):
    """Stale derived data, e.g. a forward trace that no longer matches weights."""


class DivergedError(ReluprobeError):
    """Training diverged. Carries the last iteration with finite values."""

    def __init__(self, message, last_finite_iteration, trajectory=None):
        super().__init__(message)
        self.last_finite_iteration = last_finite_iteration
        self.trajectory = trajectory


class InfeasibleError(ReluprobeError):
    """A requested construction is (empirically) infeasible.

    Carries whatever partial diagnostics the caller may use to relax the
    request (e.g. achieved sample count, margin quantiles).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
