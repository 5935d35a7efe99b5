"""Exception hierarchy.

Input problems (bad parameters, unreadable files) derive from ``InputError``;
failures of the numerics themselves derive from ``NumericalError``.  The CLI
maps the two families onto exit codes 1 and 2.
"""


class CatalysisError(Exception):
    """Base class for all package errors."""


class InputError(CatalysisError, ValueError):
    """A parameter or file is outside the domain of the operation."""


class DimensionMismatchError(InputError):
    pass


class CoverageError(InputError):
    """Quadrature record does not cover enough distinct phases."""


class NumericalError(CatalysisError, ArithmeticError):
    """A computation produced a result that cannot be trusted."""


class TruncationError(NumericalError):
    """Too much probability left the truncated Fock space."""


class NoStatisticsError(NumericalError):
    """Conditioning on an event of (numerically) zero probability."""


class NumericalConsistencyError(NumericalError):
    """An object that must be nonnegative/normalized is not."""


class DegenerateRecordError(NumericalError):
    """Quadrature record has (near) zero variance."""
