"""
Error Types
===========

This module defines the exceptions raised across the laboratory. Every error
derives from `GltLabError` so the command-line entry point can map library
failures to a single exit code, and from the closest builtin so callers that
only know about `ValueError` or `RuntimeError` keep working.
"""

from typing import FrozenSet, Iterable, Optional


class GltLabError(Exception):
    """Base class for all laboratory errors."""


class InvalidInputError(GltLabError, ValueError):
    """Raised when an operation receives input outside its domain."""


class ConfigError(GltLabError, ValueError):
    """Raised when an experiment configuration is invalid."""


class GeneratorError(GltLabError, RuntimeError):
    """
    Raised when a matrix sequence (or family) generator fails.

    Attributes:
        n: The matrix order that was requested.
        m: The family index, or None for plain sequences.
    """

    def __init__(self, message: str, n: int, m: Optional[int] = None):
        super().__init__(message)
        self.n = n
        self.m = m


class SymbolEvaluationError(GltLabError, ValueError):
    """
    Raised when a symbol or diagonal function cannot be evaluated.

    Attributes:
        index: The offending node index, when a single node is to blame.
    """

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class NotCauchyError(GltLabError, ValueError):
    """
    Raised when the splice threshold search fails within the search grid.

    Attributes:
        m: The family index whose threshold could not be certified.
    """

    def __init__(self, message: str, m: int):
        super().__init__(message)
        self.m = m


class ExpressionError(GltLabError, ValueError):
    """Base class for symbol expression errors."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (column {position})")
        self.position = position


class ExpressionSyntaxError(ExpressionError):
    """
    Raised on a malformed token stream.

    Attributes:
        position: 0-based offset of the offending token.
        expected: The set of tokens that would have been accepted.
    """

    def __init__(self, message: str, position: int, expected: Iterable[str]):
        self.expected: FrozenSet[str] = frozenset(expected)
        listing = ", ".join(sorted(self.expected))
        super().__init__(f"{message}; expected one of: {listing}", position)


class UnknownIdentifierError(ExpressionError):
    """Raised when an expression names a variable or function that does not exist."""


class ArityError(ExpressionError):
    """Raised when a function is called with the wrong number of arguments."""
