"""Exception types shared across finslerkit."""

from .jets import JetDomainError


class FinslerError(Exception):
    """Base class for finslerkit errors."""


class DomainError(FinslerError, ValueError):
    """Evaluation outside the chart (pole band, box) or at a degenerate element."""


class InvalidMetricError(FinslerError, ValueError):
    """Quadratic form or fundamental tensor not positive definite."""


class DegenerateFlagError(FinslerError, ValueError):
    """Transverse edge (numerically) parallel to the flagpole."""


class UnsupportedCaseError(FinslerError, ValueError):
    pass


class TrivialSolutionError(FinslerError, ValueError):
    pass


class SchemaError(FinslerError, ValueError):
    """Metric or report file does not match its schema."""


__all__ = [
    "FinslerError",
    "DomainError",
    "InvalidMetricError",
    "DegenerateFlagError",
    "UnsupportedCaseError",
    "TrivialSolutionError",
    "SchemaError",
    "JetDomainError",
]
