"""Exception hierarchy for the coopkal package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
and any other CoopkalError (numerical failures, contract violations) -> 4.
"""


class CoopkalError(Exception):
    """Base class for all package errors."""


class ContractError(CoopkalError, ValueError):
    """An argument violates a documented precondition (shape, symmetry, range)."""


class ConfigError(CoopkalError):
    """The experiment configuration is invalid or contains unknown keys."""


class DataError(CoopkalError):
    """Input data cannot be used (malformed file, bad geometry, too few samples)."""


class DegenerateGeometryError(DataError):
    """Node coordinates contain duplicates, so k-NN distances are ill-defined."""


class InsufficientSamplesError(DataError):
    """Fewer samples than the estimator requires."""


class NumericalError(CoopkalError):
    """Base class for failures of the numerical procedures themselves."""


class DegenerateSpectrumError(NumericalError):
    """The graph spectrum is degenerate (lambda_max == 0)."""


class SingularSourceError(NumericalError):
    """The source covariance is singular even after flooring."""


class FitFailureError(NumericalError):
    """The rational kernel fit failed at the requested orders."""


class InvalidKernelError(NumericalError):
    """A rational kernel has a nonpositive denominator on the evaluation range."""


class SingularInnovationError(NumericalError):
    """The innovation (or interpolation) matrix is numerically singular."""


class SingularSystemError(NumericalError):
    """A regularized linear system is singular and cannot be solved."""


class FlatSignalWarning(UserWarning):
    """A stream has no energy variation; period detection is degenerate."""
