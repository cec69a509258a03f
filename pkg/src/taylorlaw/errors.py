"""Exception hierarchy shared across the toolkit.

Two families matter to callers: ``UsageError`` (bad request: wrong scheme for
the table shape, unknown subject, malformed config) and ``DataError`` (the
data itself cannot be analyzed). The CLI maps them to exit codes 1 and 2.
"""


class TaylorLawError(Exception):
    """Base class for all toolkit errors."""


class UsageError(TaylorLawError):
    """The request is malformed or incompatible with the data."""


class DataError(TaylorLawError):
    """The data cannot be parsed or analyzed as requested."""


class ParseError(DataError):
    """Input text does not conform to the expected CSV layout."""


class InsufficientDataError(DataError):
    """Too few usable observations for the requested computation."""


class DegenerateDesignError(DataError):
    """The data admits no unique solution (e.g. all predictors equal)."""


class DomainError(DataError):
    """An argument lies outside the mathematical domain of the operation."""
