"""Spectral-embedding view of VICReg plus label-free structural metrics for embeddings."""

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    FormatError,
    NonFiniteError,
    SagkitError,
    TrainingDivergedError,
    UndefinedCorrelationError,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DegenerateInputError",
    "FormatError",
    "NonFiniteError",
    "SagkitError",
    "TrainingDivergedError",
    "UndefinedCorrelationError",
    "__version__",
]
