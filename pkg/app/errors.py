"""Exception types raised by qmarginal.

Input problems are ValueError subclasses so callers that only know about
ValueError keep working. Solver breakdowns are RuntimeErrors.
"""


class QMarginalError(Exception):
    """Base class for all qmarginal errors."""


class DimensionError(QMarginalError, ValueError):
    """Shapes, labels or dimensions do not fit together."""


class RankDeficientError(QMarginalError, ValueError):
    """A margin that must be full rank has (numerically) zero eigenvalues."""


class InconsistentMarginError(QMarginalError, ValueError):
    """Marginals of a scenario disagree on the common A-margin."""


class DimensionCapError(QMarginalError, ValueError):
    """A program would exceed the configured joint dimension cap."""


class DegenerateGameError(QMarginalError, ValueError):
    """A correlation game has a constant payoff."""


class NumericalError(QMarginalError, ValueError):
    """A numerical reconstruction failed its own consistency check."""


class SolverFailure(QMarginalError, RuntimeError):
    """No solver produced a usable solution."""
