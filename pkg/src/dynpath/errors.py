class DynpathError(Exception):
    """Base class for errors raised by this package."""


class DataError(DynpathError, ValueError):
    """Malformed input data or configuration."""


class RankDeficient(DynpathError, ArithmeticError):
    """A normal-equation system failed the pivot tolerance check."""


class NoUsableEventTimes(DynpathError):
    """Every event time was skipped, so no curve can be estimated."""

    def __init__(self, message, n_skipped=0):
        super().__init__(message)
        self.n_skipped = n_skipped


class NegativeHazard(DynpathError, ArithmeticError):
    """A simulated additive hazard went below zero."""


class InsufficientSurvivors(DynpathError):
    """Survival selection left too few draws for a Monte-Carlo estimate."""
