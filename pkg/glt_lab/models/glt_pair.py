"""
GLT Pair Models
===============

This module defines Fourier coefficient tables, the provenance trees that
record how a (sequence, symbol) pair was built, and the pair itself.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError
from .matrix_sequence import MatrixSequence
from .symbol_function import SymbolFunction


@dataclass(frozen=True)
class FourierData:
    """
    Finitely supported Fourier coefficients k -> f_k of a function of theta,
    f(theta) = sum_k f_k e^{i k theta}.

    Attributes:
        coefficients: Map from frequency to coefficient.
        real: Claim that f is real-valued; checked as conjugate symmetry.
    """

    coefficients: Mapping[int, complex]
    real: bool = False

    # Tolerance for the conjugate-symmetry check of real claims.
    SYMMETRY_TOL = 1e-12

    def __post_init__(self):
        cleaned = {int(k): complex(v) for k, v in self.coefficients.items()}
        if not all(np.isfinite(v) for v in cleaned.values()):
            raise InvalidInputError("Fourier coefficients must be finite")
        if self.real:
            scale = max((abs(v) for v in cleaned.values()), default=0.0)
            for k, v in cleaned.items():
                mirror = cleaned.get(-k, 0j)
                if abs(v - mirror.conjugate()) > self.SYMMETRY_TOL * max(scale, 1.0):
                    raise InvalidInputError(
                        f"Coefficients are not conjugate-symmetric at k={k}"
                    )
            # Make the symmetry exact so Toeplitz matrices come out Hermitian.
            for k in [k for k in cleaned if k > 0]:
                cleaned[-k] = cleaned[k].conjugate()
            if 0 in cleaned:
                cleaned[0] = complex(cleaned[0].real, 0.0)
        object.__setattr__(self, "coefficients", dict(sorted(cleaned.items())))

    @property
    def degree(self) -> int:
        """Largest |k| with a stored coefficient."""
        return max((abs(k) for k in self.coefficients), default=0)

    def coefficient(self, k: int) -> complex:
        return self.coefficients.get(k, 0j)

    def evaluate(self, theta: ArrayLike) -> NDArray[np.complex128]:
        """f(theta) = sum_k f_k e^{i k theta}."""
        t = np.asarray(theta, dtype=np.float64)
        total = np.zeros(t.shape, dtype=np.complex128)
        for k, v in self.coefficients.items():
            if v != 0:
                total = total + v * np.exp(1j * k * t)
        return total

    def truncated(self, degree: int) -> "FourierData":
        """Keeps the coefficients with |k| <= degree."""
        return FourierData(
            {k: v for k, v in self.coefficients.items() if abs(k) <= degree}, self.real
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            str(k): [v.real, v.imag] for k, v in self.coefficients.items()
        }


@dataclass(frozen=True)
class Provenance:
    """
    Expression tree recording how a GltPair was built.

    Attributes:
        op: One of "toeplitz", "diag", "zero", "add", "mul", "scale",
            "approximant".
        children: Provenance of the operands.
        params: Builder inputs needed to replay a leaf (coefficients, functions,
            scalars, seeds).
    """

    op: str
    children: Tuple["Provenance", ...] = ()
    params: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly description; callables are reduced to their labels."""
        params = {}
        for key, value in self.params.items():
            if isinstance(value, FourierData):
                params[key] = value.to_dict()
            elif isinstance(value, complex):
                params[key] = [value.real, value.imag]
            elif isinstance(value, (int, float, str, bool)) or value is None:
                params[key] = value
            else:
                params[key] = getattr(value, "label", repr(value))
        node: Dict[str, Any] = {"op": self.op}
        if params:
            node["params"] = params
        if self.children:
            node["children"] = [child.to_dict() for child in self.children]
        return node


@dataclass(frozen=True)
class GltPair:
    """
    A matrix sequence together with its GLT symbol and construction history.
    """

    sequence: MatrixSequence
    symbol: SymbolFunction
    provenance: Provenance

    @property
    def label(self) -> str:
        return self.sequence.label

    def with_symbol(self, symbol: SymbolFunction) -> "GltPair":
        """The same sequence paired with another symbol (provenance unchanged)."""
        return GltPair(self.sequence, symbol, self.provenance)
