"""Exception hierarchy shared across the package."""


class DuelBenchError(Exception):
    """Base class for all package errors."""


class DegenerateInputError(DuelBenchError, ValueError):
    """Input is well-formed but too small or symmetric for the operation."""


class InvalidParameterError(DuelBenchError, ValueError):
    """A numeric parameter is outside its legal range."""


class MatrixValidationError(DuelBenchError, ValueError):
    """A preference matrix violates complementarity, range or shape rules."""


class UnsupportedEnvironmentError(DuelBenchError, ValueError):
    """The requested regret functional does not exist for this environment."""


class UndefinedBoundError(DuelBenchError, ValueError):
    """A theoretical bound is undefined for the supplied gap."""


class ReplicateError(DuelBenchError, RuntimeError):
    """A single replicate failed; carries the replicate index."""

    def __init__(self, replicate: int, cause: BaseException):
        super().__init__(f"replicate {replicate} failed: {cause!r}")
        self.replicate = replicate
        self.cause = cause
