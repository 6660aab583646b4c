"""Exception hierarchy shared across the package."""


class SagkitError(Exception):
    """Base class for all package errors."""


class DegenerateInputError(SagkitError, ValueError):
    """Input is well-formed but numerically degenerate (zero-norm rows, constant vectors)."""


class UndefinedCorrelationError(DegenerateInputError):
    """A correlation is undefined because one of its inputs has zero variance."""


class ConvergenceError(SagkitError, RuntimeError):
    """An iterative solver hit its iteration cap."""


class TrainingDivergedError(SagkitError, RuntimeError):
    def __init__(self, epoch, message="non-finite loss"):
        super().__init__(f"training diverged at epoch {epoch}: {message}")
        self.epoch = epoch


class FormatError(SagkitError, ValueError):
    """A file could not be parsed into the expected format."""

    def __init__(self, message, code="bad_format"):
        super().__init__(message)
        self.code = code


class NonFiniteError(DegenerateInputError):
    """A forward pass produced NaN or infinite values."""
