"""
GLT Service
===========

This module provides `GltService`, the GLT building blocks and the
symbol-tracking algebra: Toeplitz sequences from Fourier data, diagonal
sampling sequences, zero-distributed sequences, sums / products / scalar
multiples of (sequence, symbol) pairs, and dense approximants of arbitrary
symbols by separable dyadic-step x trigonometric-polynomial pairs.
"""

import logging
import math
from functools import reduce
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from ..models.errors import InvalidInputError, SymbolEvaluationError
from ..models.glt_pair import FourierData, GltPair, Provenance
from ..models.matrix import Matrix
from ..models.matrix_sequence import AcsFamily, AcsWitness, MatrixSequence
from ..models.symbol_function import SymbolFunction, midpoint_nodes

logger = logging.getLogger(__name__)

DiagFunction = Callable[[NDArray[np.float64]], ArrayLike]
Rate = Union[str, Callable[[int], float]]

# Named rates for zero-distributed sequences: rank r(n) and norm eps(n).
RANK_RATES: Dict[str, Callable[[int], int]] = {
    "sqrt": lambda n: math.isqrt(n),
    "log": lambda n: int(math.log(n)),
    "zero": lambda n: 0,
}
NORM_RATES: Dict[str, Callable[[int], float]] = {
    # log(1) = 0
    "inv_log": lambda n: 1.0 / math.log(n) if n > 1 else 1.0,
    "inv_sqrt": lambda n: 1.0 / math.sqrt(n),
    "inv_n": lambda n: 1.0 / n,
    "zero": lambda n: 0.0,
}

# Orders at which a zero-distributed rate is checked to vanish.
VANISHING_ORDERS = (2**10, 2**15, 2**20, 2**25)


class DyadicStep:
    """Piecewise constant function on the 2^m dyadic cells of [0, 1]."""

    def __init__(self, levels: ArrayLike, label: str = "step"):
        self.levels = np.asarray(levels, dtype=np.complex128)
        self.label = label

    def __call__(self, x: ArrayLike) -> NDArray[np.complex128]:
        cells = self.levels.shape[0]
        index = np.clip(np.floor(np.asarray(x) * cells).astype(int), 0, cells - 1)
        return self.levels[index]


class GltService:
    """
    Builds GLT pairs and combines them while tracking their symbols.
    """

    def fourier_coefficients(
        self,
        f: Callable[[NDArray[np.float64]], ArrayLike],
        degree: int,
        quadrature: Optional[int] = None,
        real: bool = False,
    ) -> FourierData:
        """
        Trapezoid/DFT approximation of f_k = (1/2pi) int f(theta) e^{-ik theta}
        for |k| <= degree, exact for trigonometric polynomials of degree <= K.

        Args:
            f: Vectorized periodic function of theta.
            degree: K, the largest frequency kept.
            quadrature: Q, number of nodes; at least 4K + 4.
            real: Claim f is real-valued (coefficients made conjugate-symmetric).

        Raises:
            InvalidInputError: If Q is too small or f is not finite on the nodes.
        """
        if degree < 0:
            raise InvalidInputError(f"Degree must be non-negative, got {degree}")
        nodes = quadrature if quadrature is not None else max(4 * degree + 4, 1024)
        if nodes < 4 * degree + 4:
            raise InvalidInputError(
                f"Quadrature size {nodes} too small for degree {degree}; need >= {4 * degree + 4}"
            )

        thetas = -np.pi + 2 * np.pi * np.arange(nodes) / nodes
        with np.errstate(all="ignore"):
            values = np.broadcast_to(np.asarray(f(thetas), dtype=np.complex128), thetas.shape)
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("Function is not finite on the quadrature nodes")

        spectrum = np.fft.fft(values) / nodes
        coefficients = {}
        for k in range(-degree, degree + 1):
            coefficients[k] = complex((-1) ** abs(k) * spectrum[k % nodes])

        scale = max(1.0, max(abs(v) for v in coefficients.values()))
        coefficients = {k: v for k, v in coefficients.items() if abs(v) > 1e-14 * scale}
        return FourierData(coefficients, real)

    def toeplitz(self, data: FourierData, n: int) -> Matrix:
        """The n x n matrix with entry (i, j) = f_{i-j}."""
        if n < 1:
            raise InvalidInputError(f"Matrix order must be positive, got {n}")
        column = np.zeros(n, dtype=np.complex128)
        row = np.zeros(n, dtype=np.complex128)
        for k, v in data.coefficients.items():
            if 0 <= k < n:
                column[k] = v
            if -n < k <= 0:
                row[-k] = v
        return scipy.linalg.toeplitz(column, row)

    def diag_sampling(self, a: DiagFunction, n: int) -> Matrix:
        """
        diag(a(1/n), a(2/n), ..., a(n/n)).

        Raises:
            SymbolEvaluationError: If a is not finite at some node (index carried).
        """
        if n < 1:
            raise InvalidInputError(f"Matrix order must be positive, got {n}")
        xs = np.arange(1, n + 1, dtype=np.float64) / n
        with np.errstate(all="ignore"):
            values = np.broadcast_to(np.asarray(a(xs), dtype=np.complex128), xs.shape)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            index = int(bad[0])
            raise SymbolEvaluationError(
                f"Diagonal function not finite at node {index} (x = {xs[index]})", index
            )
        return np.diag(values)

    def toeplitz_pair(self, data: FourierData, label: Optional[str] = None) -> GltPair:
        """T_n(f) with symbol f(theta), constant in x."""
        name = label or f"T({_describe(data)})"
        sequence = MatrixSequence(lambda n: self.toeplitz(data, n), name)
        symbol = SymbolFunction(lambda x, t: data.evaluate(t), name.replace("T(", "f(", 1))
        return GltPair(sequence, symbol, Provenance("toeplitz", params={"coefficients": data, "label": name}))

    def diag_pair(self, a: DiagFunction, label: str = "a") -> GltPair:
        """D_n(a) with symbol a(x), constant in theta."""
        sequence = MatrixSequence(lambda n: self.diag_sampling(a, n), f"D({label})")
        symbol = SymbolFunction(lambda x, t: np.asarray(a(x), dtype=np.complex128), label)
        return GltPair(sequence, symbol, Provenance("diag", params={"function": a, "label": label}))

    def zero_pair(
        self,
        kind: str,
        rate: Rate,
        seed: int = 0,
        magnitude: Optional[Callable[[int], float]] = None,
    ) -> GltPair:
        """
        A zero-distributed sequence paired with the zero symbol.

        Args:
            kind: "low_rank" (rank r(n) with entries of size `magnitude(n)`,
                default n) or "small_norm" (eps(n) times a unitary matrix).
            rate: r(n) or eps(n), as a callable or a name from RANK_RATES /
                NORM_RATES.
            seed: Seed for the random factors; each n draws from (seed, n).
            magnitude: Entry size of low-rank perturbations.

        Raises:
            InvalidInputError: If r(n)/n or eps(n) does not vanish.
        """
        if kind == "low_rank":
            rank = _resolve(rate, RANK_RATES)
            _check_vanishing(lambda n: rank(n) / n, f"rank rate {rate}")
            size = magnitude or (lambda n: float(n))

            def generator(n: int) -> Matrix:
                r = int(rank(n))
                if not 0 <= r <= n:
                    raise InvalidInputError(f"Rank {r} outside [0, {n}]")
                if r == 0:
                    return np.zeros((n, n), dtype=np.complex128)
                rng = np.random.default_rng([seed, n])
                left = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
                right = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
                product = left @ right.conj().T
                return product * (size(n) / np.max(np.abs(product)))

            label = f"Z_rank({_rate_name(rate)})"
        elif kind == "small_norm":
            norm = _resolve(rate, NORM_RATES)
            _check_vanishing(norm, f"norm rate {rate}")

            def generator(n: int) -> Matrix:
                rng = np.random.default_rng([seed, n])
                gaussian = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                q, r = np.linalg.qr(gaussian)
                phases = np.diagonal(r) / np.abs(np.diagonal(r))
                return norm(n) * (q * phases)

            label = f"Z_norm({_rate_name(rate)})"
        else:
            raise InvalidInputError(f"Unknown zero-distributed kind '{kind}'")

        sequence = MatrixSequence(generator, label)
        symbol = SymbolFunction.constant(0.0, "0")
        params = {"kind": kind, "rate": rate, "seed": seed, "magnitude": magnitude}
        return GltPair(sequence, symbol, Provenance("zero", params=params))

    def pair_add(self, first: GltPair, second: GltPair) -> GltPair:
        """({A_n + B_n}, k + h)."""
        return GltPair(
            first.sequence.plus(second.sequence),
            first.symbol.plus(second.symbol),
            Provenance("add", (first.provenance, second.provenance)),
        )

    def pair_mul(self, first: GltPair, second: GltPair) -> GltPair:
        """({A_n B_n}, k h)."""
        return GltPair(
            first.sequence.times(second.sequence),
            first.symbol.times(second.symbol),
            Provenance("mul", (first.provenance, second.provenance)),
        )

    def pair_scale(self, factor: complex, pair: GltPair) -> GltPair:
        """({lambda A_n}, lambda k)."""
        return GltPair(
            pair.sequence.scaled(factor),
            pair.symbol.scaled(factor),
            Provenance("scale", (pair.provenance,), {"factor": complex(factor)}),
        )

    def dense_symbol_approximant(
        self,
        symbol: SymbolFunction,
        m: int,
        fit_grid: Tuple[int, int] = (256, 256),
    ) -> GltPair:
        """
        A GLT pair whose symbol is sum_{|j|<=m} a_j(x) e^{ij theta}, with a_j
        constant on the 2^m dyadic cells of [0, 1], fitted to `symbol` by
        node-wise projection (discrete Fourier projection in theta, cell
        averages in x).

        The matrices are banded: entry (r, r-j) = a_j((r+1)/n), which is what
        the recorded sum of D_n(a_j) T_n(e^{ij theta}) products evaluates to.

        Raises:
            SymbolEvaluationError: If the symbol is not finite on the fit grid.
        """
        if m < 1:
            raise InvalidInputError(f"Approximant level must be >= 1, got {m}")
        cells = 2**m
        n_x = cells * max(1, -(-fit_grid[0] // cells))
        n_theta = max(fit_grid[1], 2 * m + 2)

        xs, thetas = midpoint_nodes(n_x, n_theta)
        grid_x, grid_theta = np.meshgrid(xs, thetas, indexing="ij")
        samples = np.asarray(symbol(grid_x, grid_theta))
        if not np.all(np.isfinite(samples)):
            first = int(np.flatnonzero(~np.isfinite(samples.ravel()))[0])
            raise SymbolEvaluationError(
                f"Symbol '{symbol.label}' is not finite on the fit grid", first
            )

        fitted = {}
        for j in range(-m, m + 1):
            projection = samples @ np.exp(-1j * j * thetas) / n_theta
            fitted[j] = projection.reshape(cells, n_x // cells).mean(axis=1)

        # Frequencies at rounding level are dropped.
        scale = max(float(np.max(np.abs(v))) for v in fitted.values())
        levels: Dict[int, NDArray[np.complex128]] = {
            j: v for j, v in fitted.items() if np.max(np.abs(v)) > 1e-13 * scale
        }

        label = f"approx_{m}({symbol.label})"
        if not levels:
            zero = self.diag_pair(lambda x: np.zeros(np.shape(x)), "0")
            return GltPair(
                MatrixSequence(zero.sequence.generator, label),
                zero.symbol,
                Provenance("approximant", (zero.provenance,), {"symbol": symbol, "m": m}),
            )

        terms = [
            self.pair_mul(
                self.diag_pair(DyadicStep(values, f"a_{j}"), f"a_{j}"),
                self.toeplitz_pair(FourierData({j: 1.0})),
            )
            for j, values in levels.items()
        ]
        combined = reduce(self.pair_add, terms)
        steps = {j: DyadicStep(values) for j, values in levels.items()}

        def banded(n: int) -> Matrix:
            matrix = np.zeros((n, n), dtype=np.complex128)
            xs_n = np.arange(1, n + 1, dtype=np.float64) / n
            rows = np.arange(n)
            for j, step in steps.items():
                mask = (rows - j >= 0) & (rows - j < n)
                matrix[rows[mask], rows[mask] - j] = step(xs_n[mask])
            return matrix

        return GltPair(
            MatrixSequence(banded, label),
            SymbolFunction(combined.symbol.evaluate, label),
            Provenance("approximant", (combined.provenance,), {"symbol": symbol, "m": m}),
        )

    def fourier_truncation_family(self, data: FourierData, label: str = "") -> AcsFamily:
        """The family (m, n) -> T_n(f_m), f_m the degree-m truncation of f."""
        name = label or f"T({_describe(data)})"
        return AcsFamily(lambda m, n: self.toeplitz(data.truncated(m), n), f"trunc {name}")

    def toeplitz_witness(self, data: FourierData) -> AcsWitness:
        """
        The a.c.s. witness T_n(f) = T_n(f_m) + T_n(f - f_m) + 0, with
        omega(m) the l1 norm of the dropped coefficients.
        """

        def tail(m: int) -> FourierData:
            return FourierData({k: v for k, v in data.coefficients.items() if abs(k) > m})

        def splitting(m: int, n: int) -> Tuple[Matrix, Matrix]:
            return self.toeplitz(tail(m), n), np.zeros((n, n), dtype=np.complex128)

        return AcsWitness(
            thresholds=lambda m: 0,
            omega=lambda m: sum(abs(v) for v in tail(m).coefficients.values()),
            c=lambda m: 0.0,
            splitting=splitting,
        )

    def replay(self, provenance: Provenance) -> GltPair:
        """
        Rebuilds a pair from its provenance tree.

        Raises:
            InvalidInputError: For an unknown operation.
        """
        params = provenance.params
        children = [self.replay(child) for child in provenance.children]
        if provenance.op == "toeplitz":
            return self.toeplitz_pair(params["coefficients"], params.get("label"))
        if provenance.op == "diag":
            return self.diag_pair(params["function"], params["label"])
        if provenance.op == "zero":
            return self.zero_pair(params["kind"], params["rate"], params["seed"], params["magnitude"])
        if provenance.op == "add":
            return self.pair_add(children[0], children[1])
        if provenance.op == "mul":
            return self.pair_mul(children[0], children[1])
        if provenance.op == "scale":
            return self.pair_scale(params["factor"], children[0])
        if provenance.op == "approximant":
            return children[0]
        raise InvalidInputError(f"Cannot replay operation '{provenance.op}'")

    def catalog(self) -> Dict[str, GltPair]:
        """The named pairs used by the acceptance experiments."""
        laplacian = self.toeplitz_pair(
            FourierData({-1: -1.0, 0: 2.0, 1: -1.0}, real=True), "T(2-2cos(theta))"
        )
        ramp = self.diag_pair(lambda x: x, "x")
        return {
            "laplacian": laplacian,
            "shift": self.toeplitz_pair(FourierData({1: 1.0}), "T(exp(i*theta))"),
            "ramp": ramp,
            "ramp_laplacian": self.pair_mul(ramp, laplacian),
            "identity": self.toeplitz_pair(FourierData({0: 1.0}, real=True), "T(1)"),
            "zero": self.diag_pair(lambda x: np.zeros(np.shape(x)), "0"),
        }


def _describe(data: FourierData) -> str:
    terms = [f"{k}:{v:g}" for k, v in data.coefficients.items()]
    return "{" + ", ".join(terms) + "}"


def _resolve(rate: Rate, named: Dict[str, Callable]) -> Callable:
    if callable(rate):
        return rate
    if rate not in named:
        raise InvalidInputError(f"Unknown rate '{rate}', expected one of {sorted(named)}")
    return named[rate]


def _rate_name(rate: Rate) -> str:
    return rate if isinstance(rate, str) else getattr(rate, "__name__", "custom")


def _check_vanishing(rate: Callable[[int], float], what: str) -> None:
    values = [float(rate(n)) for n in VANISHING_ORDERS]
    if any(v < 0 or not math.isfinite(v) for v in values):
        raise InvalidInputError(f"The {what} must be finite and non-negative")
    increasing = any(b > a for a, b in zip(values, values[1:]))
    if increasing or values[-1] > values[0] / 2:
        raise InvalidInputError(f"The {what} does not vanish as n grows: {values}")
