"""
Matrix Sequence Models
======================

This module defines the data types of the sequence space: matrix sequences
n -> A_n, doubly indexed families (m, n) -> B_{n,m}, the ladder reports that
stand in for a limsup, and the a.c.s. witnesses checked against a family.

Generators are plain callables. They must be deterministic: calling them twice
with the same arguments yields the same matrix. Randomized generators take
their seed at construction time.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import GeneratorError, InvalidInputError
from .matrix import Matrix, as_matrix

DEFAULT_TAIL_WINDOW = 3


def _checked(matrix, n: int, label: str, m: Optional[int] = None) -> Matrix:
    a = as_matrix(matrix)
    if a.shape[0] != n:
        where = f"m={m}, n={n}" if m is not None else f"n={n}"
        raise InvalidInputError(
            f"Generator '{label}' returned order {a.shape[0]} at {where}"
        )
    if a is matrix:
        a = a.copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MatrixSequence:
    """
    A deterministic map n -> A_n with A_n of order n.

    Attributes:
        generator: Callable producing the n-th matrix.
        label: Human readable identifier used in logs and reports.
    """

    generator: Callable[[int], Matrix]
    label: str = "sequence"

    def __call__(self, n: int) -> Matrix:
        if n < 1:
            raise InvalidInputError(f"Matrix order must be positive, got {n}")
        try:
            matrix = self.generator(n)
        except InvalidInputError:
            raise
        except Exception as e:
            raise GeneratorError(f"Sequence '{self.label}' failed at n={n}: {e}", n)
        return _checked(matrix, n, self.label)

    def plus(self, other: "MatrixSequence") -> "MatrixSequence":
        return MatrixSequence(
            lambda n: self(n) + other(n), f"({self.label} + {other.label})"
        )

    def minus(self, other: "MatrixSequence") -> "MatrixSequence":
        return MatrixSequence(
            lambda n: self(n) - other(n), f"({self.label} - {other.label})"
        )

    def times(self, other: "MatrixSequence") -> "MatrixSequence":
        return MatrixSequence(
            lambda n: self(n) @ other(n), f"({self.label} * {other.label})"
        )

    def scaled(self, factor: complex) -> "MatrixSequence":
        return MatrixSequence(
            lambda n: complex(factor) * self(n), f"({factor} * {self.label})"
        )

    @staticmethod
    def zeros() -> "MatrixSequence":
        return MatrixSequence(lambda n: np.zeros((n, n), dtype=np.complex128), "0")


@dataclass(frozen=True)
class AcsFamily:
    """
    A deterministic doubly indexed map (m, n) -> B_{n,m} of order n.

    Attributes:
        generator: Callable producing the member matrix for (m, n).
        label: Human readable identifier.
    """

    generator: Callable[[int, int], Matrix]
    label: str = "family"

    def __call__(self, m: int, n: int) -> Matrix:
        if n < 1:
            raise InvalidInputError(f"Matrix order must be positive, got {n}")
        try:
            matrix = self.generator(m, n)
        except InvalidInputError:
            raise
        except Exception as e:
            raise GeneratorError(
                f"Family '{self.label}' failed at m={m}, n={n}: {e}", n, m
            )
        return _checked(matrix, n, self.label, m)

    def member(self, m: int) -> MatrixSequence:
        """Returns the m-th member sequence n -> B_{n,m}."""
        return MatrixSequence(lambda n: self(m, n), f"{self.label}[m={m}]")

    @staticmethod
    def constant(sequence: MatrixSequence) -> "AcsFamily":
        """The family whose members all equal `sequence`."""
        return AcsFamily(lambda m, n: sequence(n), f"const({sequence.label})")


@dataclass(frozen=True)
class LadderReport:
    """
    Per-index metric values plus a tail estimate, the finite stand-in for a
    limsup.

    Attributes:
        index_grid: Strictly increasing n (or m) values.
        values: One non-negative value per grid point.
        tail_window: How many trailing points form the tail estimate.
        label: What was measured.
        verdict: Optional pass/fail attached by the producing operation.
    """

    index_grid: Tuple[int, ...]
    values: Tuple[float, ...]
    tail_window: int
    label: str = ""
    verdict: Optional[bool] = None

    def __post_init__(self):
        if len(self.values) != len(self.index_grid):
            raise InvalidInputError("Ladder values and grid differ in length")
        if not 1 <= self.tail_window <= len(self.index_grid):
            raise InvalidInputError(
                f"Tail window {self.tail_window} outside [1, {len(self.index_grid)}]"
            )

    @property
    def tail_estimate(self) -> float:
        return max(self.values[-self.tail_window :])

    def to_dict(self) -> Dict:
        return {
            "label": self.label,
            "index_grid": list(self.index_grid),
            "values": list(self.values),
            "tail_window": self.tail_window,
            "tail_estimate": self.tail_estimate,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class AcsWitness:
    """
    A claimed a.c.s. splitting A_n = B_{n,m} + N_{n,m} + R_{n,m}.

    Attributes:
        thresholds: m -> n_m; the bounds are checked for n > n_m.
        omega: m -> norm bound for N_{n,m}.
        c: m -> rank fraction bound for R_{n,m}.
        splitting: (m, n) -> (N_{n,m}, R_{n,m}).
    """

    thresholds: Callable[[int], int]
    omega: Callable[[int], float]
    c: Callable[[int], float]
    splitting: Callable[[int, int], Tuple[Matrix, Matrix]]


@dataclass(frozen=True)
class WitnessVerdict:
    """Outcome of checking one m of an a.c.s. witness."""

    m: int
    passed: bool
    violation: Optional[str] = None
    n: Optional[int] = None

    def to_dict(self) -> Dict:
        return {
            "m": self.m,
            "passed": self.passed,
            "violation": self.violation,
            "n": self.n,
        }


def tail_suprema(modulus: Sequence[Sequence[float]]) -> List[float]:
    """sup over t > s of modulus[s][t], for every s but the last."""
    return [max(modulus[s][s + 1 :]) for s in range(len(modulus) - 1)]


@dataclass(frozen=True)
class CauchyReport:
    """
    Pairwise distance estimates between family members.

    Attributes:
        m_grid: The member indices that were compared.
        modulus: modulus[s][t] is the distance estimate between members s and t.
        verdict: Whether the members behave as a Cauchy sequence.
    """

    m_grid: Tuple[int, ...]
    modulus: Tuple[Tuple[float, ...], ...]
    verdict: bool

    @property
    def sup_tail(self) -> List[float]:
        return tail_suprema(self.modulus)

    def to_dict(self) -> Dict:
        return {
            "m_grid": list(self.m_grid),
            "modulus": [list(row) for row in self.modulus],
            "sup_tail": self.sup_tail,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class SpliceResult:
    """
    The spliced limit sequence and the thresholds it was built from.

    `thresholds[j]` is the first order from which member `m_grid[j]` is used.
    """

    sequence: MatrixSequence
    m_grid: Tuple[int, ...]
    thresholds: Tuple[int, ...]

    def member_index(self, n: int) -> int:
        """Position in m_grid of the member used at order n."""
        return splice_index(self.thresholds, n)

    def to_dict(self) -> Dict:
        return {"m_grid": list(self.m_grid), "thresholds": list(self.thresholds)}


def validate_grid(grid: Sequence[int], name: str = "grid") -> Tuple[int, ...]:
    """
    Checks a grid is non-empty, strictly increasing and positive.

    Raises:
        InvalidInputError: If any of the conditions fail.
    """
    values = tuple(int(v) for v in grid)
    if not values:
        raise InvalidInputError(f"{name} must not be empty")
    if values[0] < 1:
        raise InvalidInputError(f"{name} entries must be positive")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InvalidInputError(f"{name} must be strictly increasing: {values}")
    return values


def empty_splitting(m: int, n: int) -> Tuple[Matrix, Matrix]:
    zero = np.zeros((n, n), dtype=np.complex128)
    return zero, zero


def splice_index(thresholds: Sequence[int], n: int) -> int:
    """Index of the last threshold that is <= n (0 below the first one)."""
    index = 0
    for j, threshold in enumerate(thresholds):
        if threshold <= n:
            index = j
    return index
