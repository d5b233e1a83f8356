"""Semantic exception hierarchy shared by every marq module."""


class MarqError(Exception):
    """Base class for all library errors."""


class DomainError(MarqError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class AccuracyError(MarqError, RuntimeError):
    """A series or quadrature failed to converge within the configured caps."""

    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error
