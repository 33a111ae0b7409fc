"""
Symbol Function Models
======================

This module defines the symbol-space data types: measurable functions
k(x, theta) on D = [0, 1] x [-pi, pi] and their absolute-value samples on a
midpoint tensor grid.

Symbols are evaluated in vectorized form: `evaluate(x, theta)` receives numpy
arrays of equal shape and returns a complex array of that shape. Scalars work
as zero-dimensional arrays.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError

SymbolCallable = Callable[[NDArray[np.float64], NDArray[np.float64]], ArrayLike]


@dataclass(frozen=True)
class SymbolFunction:
    """
    A samplable symbol k: D -> C.

    Attributes:
        evaluate: Vectorized callable (x, theta) -> complex values. Points of a
            declared null set may return NaN or inf; sampling substitutes them.
        label: Human readable identifier.
    """

    evaluate: SymbolCallable
    label: str = "k"

    def __call__(self, x: ArrayLike, theta: ArrayLike) -> NDArray[np.complex128]:
        xs, thetas = np.broadcast_arrays(
            np.asarray(x, dtype=np.float64), np.asarray(theta, dtype=np.float64)
        )
        with np.errstate(all="ignore"):
            values = np.asarray(self.evaluate(xs, thetas), dtype=np.complex128)
        return np.broadcast_to(values, xs.shape)

    def plus(self, other: "SymbolFunction") -> "SymbolFunction":
        return SymbolFunction(
            lambda x, t: self(x, t) + other(x, t), f"({self.label} + {other.label})"
        )

    def minus(self, other: "SymbolFunction") -> "SymbolFunction":
        return SymbolFunction(
            lambda x, t: self(x, t) - other(x, t), f"({self.label} - {other.label})"
        )

    def times(self, other: "SymbolFunction") -> "SymbolFunction":
        return SymbolFunction(
            lambda x, t: self(x, t) * other(x, t), f"({self.label} * {other.label})"
        )

    def scaled(self, factor: complex) -> "SymbolFunction":
        return SymbolFunction(
            lambda x, t: complex(factor) * self(x, t), f"({factor} * {self.label})"
        )

    @staticmethod
    def constant(value: complex, label: str = "") -> "SymbolFunction":
        return SymbolFunction(
            lambda x, t: np.full(np.shape(x), complex(value)), label or f"{value}"
        )


@dataclass(frozen=True)
class SymbolSamples:
    """
    |k| at the nodes of a midpoint tensor grid, every node carrying measure
    |D| / (n_x * n_theta).

    Attributes:
        values: Flat array of |k|, x-major (index i * n_theta + j).
        n_x: Nodes along x.
        n_theta: Nodes along theta.
        substituted: Nodes whose value was taken from a neighbour.
    """

    values: NDArray[np.float64]
    n_x: int
    n_theta: int
    substituted: int = 0

    def __post_init__(self):
        if self.values.shape != (self.n_x * self.n_theta,):
            raise InvalidInputError(
                f"Expected {self.n_x * self.n_theta} samples, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise InvalidInputError("Samples must be finite and non-negative")

    @property
    def grid_spec(self) -> Tuple[int, int]:
        return self.n_x, self.n_theta

    def sorted_desc(self) -> NDArray[np.float64]:
        """Values sorted non-increasing; node order does not matter after this."""
        return np.sort(self.values)[::-1]

    def to_dict(self) -> Dict:
        return {
            "n_x": self.n_x,
            "n_theta": self.n_theta,
            "substituted": self.substituted,
            "max": float(self.values.max()) if self.values.size else 0.0,
        }


def midpoint_nodes(n_x: int, n_theta: int) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Midpoint nodes x_i = (2i-1)/(2 n_x) and theta_j = pi (2j-1-n_theta)/n_theta.

    For power-of-two sizes the node sets are exactly closed under x -> 1-x and
    theta -> -theta.
    """
    if n_x < 1 or n_theta < 1:
        raise InvalidInputError(f"Grid sizes must be positive, got ({n_x}, {n_theta})")
    xs = (2.0 * np.arange(1, n_x + 1) - 1.0) / (2.0 * n_x)
    thetas = np.pi * ((2.0 * np.arange(1, n_theta + 1) - 1.0 - n_theta) / n_theta)
    return xs, thetas
