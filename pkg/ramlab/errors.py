"""
ramlab - Error types

Every failure raised on purpose by the library derives from RamlabError.
The CLI maps GuardExceededError to exit code 2 and InvalidInputError to 1.
"""

from typing import Optional


class RamlabError(Exception):
    """Base class for all ramlab errors."""


class InvalidInputError(RamlabError, ValueError):
    """Malformed word, graph or file, or an out-of-domain parameter."""


class NotAQuotientError(InvalidInputError):
    """The two core graphs are not in the required X-covering relation."""


class InconsistentTableError(RamlabError):
    """An exact Moebius identity failed after inversion."""


class GuardExceededError(RamlabError):
    """
    A configured resource guard would be exceeded.

    Attributes:
        guard: Name of the GuardConfig field that tripped
        requested: Size of the computation that was asked for
        limit: The configured limit
    """

    def __init__(self, guard: str, requested: int, limit: int, detail: Optional[str] = None):
        self.guard = guard
        self.requested = requested
        self.limit = limit
        message = f"guard '{guard}' exceeded: requested {requested}, limit {limit}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
