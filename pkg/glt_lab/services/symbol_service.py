"""
Symbol Service
==============

This module provides `SymbolService`, the space of measurable functions on
D = [0, 1] x [-pi, pi] with the pseudometric p_m / d_m that induces
convergence in measure. Symbols are sampled on a midpoint tensor grid; every
statistic is computed on the sorted sample multiset.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from ..models.errors import InvalidInputError, SymbolEvaluationError
from ..models.matrix_sequence import CauchyReport, LadderReport
from ..models.symbol_function import SymbolFunction, SymbolSamples, midpoint_nodes
from .sequence_service import capped_scan, cauchy_verdict

logger = logging.getLogger(__name__)

DEFAULT_GRID = (256, 256)

REARRANGEMENTS = ("reflect_x", "reflect_theta", "shift_x", "shift_theta")


class SymbolService:
    """
    Samples symbols and computes measure-theoretic statistics on the samples.
    """

    # Largest fraction of nodes that may be substituted from a neighbour.
    MAX_FAILURE_FRACTION = 1e-3

    def __init__(self, cauchy_tol: float = 0.05):
        self._cauchy_tol = cauchy_tol

    def sample_abs(
        self, symbol: SymbolFunction, n_x: int = DEFAULT_GRID[0], n_theta: int = DEFAULT_GRID[1]
    ) -> SymbolSamples:
        """
        Evaluates |k| at the midpoint tensor nodes.

        Nodes where k is not finite (a declared null set) take the value of the
        nearest finite node along theta, then along x.

        Raises:
            SymbolEvaluationError: If more than 0.1% of the nodes fail, or the
                evaluation itself raises.
        """
        xs, thetas = midpoint_nodes(n_x, n_theta)
        grid_x, grid_theta = np.meshgrid(xs, thetas, indexing="ij")
        try:
            values = np.abs(symbol(grid_x, grid_theta))
        except Exception as e:
            raise SymbolEvaluationError(f"Symbol '{symbol.label}' failed to evaluate: {e}")
        values = np.array(values, dtype=np.float64)

        failed = ~np.isfinite(values)
        count = int(failed.sum())
        if count:
            if count > self.MAX_FAILURE_FRACTION * values.size:
                first = int(np.flatnonzero(failed.ravel())[0])
                raise SymbolEvaluationError(
                    f"Symbol '{symbol.label}' is not finite at {count} of "
                    f"{values.size} nodes",
                    first,
                )
            values = self._substitute(values, failed)
            logger.warning(
                f"Symbol '{symbol.label}': substituted {count} null-set nodes from neighbours"
            )
        return SymbolSamples(values.ravel(), n_x, n_theta, count)

    @staticmethod
    def _substitute(values: NDArray[np.float64], failed: NDArray[np.bool_]) -> NDArray[np.float64]:
        result = values.copy()
        n_x, n_theta = values.shape
        for i, j in zip(*np.nonzero(failed)):
            replacement = None
            for offset in range(1, max(n_x, n_theta)):
                for a, b in ((i, j - offset), (i, j + offset), (i - offset, j), (i + offset, j)):
                    if 0 <= a < n_x and 0 <= b < n_theta and not failed[a, b]:
                        replacement = values[a, b]
                        break
                if replacement is not None:
                    break
            if replacement is None:
                raise SymbolEvaluationError("No finite neighbour to substitute", int(i * n_theta + j))
            result[i, j] = replacement
        return result

    def p_m_hat(self, samples: SymbolSamples) -> float:
        """
        min(1, min_i {(i-1)/N + v_i}) over the samples sorted non-increasing.

        Exact on the samples: the optimal sets are the sublevel sets of |k|.
        """
        if samples.values.size == 0:
            raise InvalidInputError("p_m needs at least one sample")
        return capped_scan(samples.sorted_desc())

    def d_m_hat(
        self,
        first: SymbolFunction,
        second: SymbolFunction,
        n_x: int = DEFAULT_GRID[0],
        n_theta: int = DEFAULT_GRID[1],
    ) -> float:
        """p_m-hat of |k - h| sampled node by node on a shared grid."""
        return self.p_m_hat(self.sample_abs(first.minus(second), n_x, n_theta))

    def abs_cdf(self, samples: SymbolSamples, t_grid: Sequence[float]) -> NDArray[np.float64]:
        """
        Fraction of samples <= t for every t of the grid.

        Raises:
            InvalidInputError: If the t grid is empty.
        """
        ts = np.asarray(t_grid, dtype=np.float64)
        if ts.size == 0:
            raise InvalidInputError("t_grid must not be empty")
        ordered = np.sort(samples.values)
        return np.searchsorted(ordered, ts, side="right") / ordered.size

    def converge_in_measure_check(
        self,
        members: Sequence[SymbolFunction],
        limit: SymbolFunction,
        n_x: int = DEFAULT_GRID[0],
        n_theta: int = DEFAULT_GRID[1],
        m_grid: Optional[Sequence[int]] = None,
        tail_window: int = 1,
    ) -> LadderReport:
        """
        d_m-hat between each member and the limit, as a ladder over m.

        The verdict is true when the values never increase.
        """
        if len(members) < 2:
            raise InvalidInputError("Convergence check needs at least 2 members")
        index = tuple(m_grid) if m_grid is not None else tuple(range(1, len(members) + 1))
        if len(index) != len(members):
            raise InvalidInputError("m_grid must have one entry per member")

        values = tuple(self.d_m_hat(k, limit, n_x, n_theta) for k in members)
        verdict = all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
        return LadderReport(index, values, tail_window, f"d_m(k_m, {limit.label})", verdict)

    def symbol_is_cauchy(
        self,
        members: Sequence[SymbolFunction],
        m_grid: Sequence[int],
        n_x: int = DEFAULT_GRID[0],
        n_theta: int = DEFAULT_GRID[1],
    ) -> CauchyReport:
        """
        Pairwise d_m-hat between symbols, judged with the same rule as the
        sequence-side Cauchy check.
        """
        if len(members) < 3 or len(members) != len(m_grid):
            raise InvalidInputError("Need at least 3 members, one per m")

        size = len(members)
        modulus: List[List[float]] = [[0.0] * size for _ in range(size)]
        for s in range(size):
            for t in range(s + 1, size):
                modulus[s][t] = modulus[t][s] = self.d_m_hat(
                    members[s], members[t], n_x, n_theta
                )
        verdict = cauchy_verdict(m_grid, modulus, self._cauchy_tol)
        return CauchyReport(tuple(m_grid), tuple(tuple(row) for row in modulus), verdict)

    def rearrange(self, symbol: SymbolFunction, which: str, offset: float = 0.0) -> SymbolFunction:
        """
        Composes the symbol with a measure-preserving change of variables.

        Args:
            symbol: The symbol to transform.
            which: One of "reflect_x" (x -> 1-x), "reflect_theta" (theta ->
                -theta), "shift_x" (x -> x + offset mod 1) or "shift_theta"
                (theta -> theta + offset, wrapped to [-pi, pi)).
            offset: Translation used by the shift variants.

        Raises:
            InvalidInputError: For an unknown rearrangement.
        """
        if which == "reflect_x":
            return SymbolFunction(lambda x, t: symbol(1.0 - x, t), f"{symbol.label}(1-x)")
        if which == "reflect_theta":
            return SymbolFunction(lambda x, t: symbol(x, -t), f"{symbol.label}(-theta)")
        if which == "shift_x":
            return SymbolFunction(
                lambda x, t: symbol(np.mod(x + offset, 1.0), t),
                f"{symbol.label}(x+{offset})",
            )
        if which == "shift_theta":
            return SymbolFunction(
                lambda x, t: symbol(x, np.mod(t + offset + np.pi, 2 * np.pi) - np.pi),
                f"{symbol.label}(theta+{offset})",
            )
        raise InvalidInputError(
            f"Unknown rearrangement '{which}', expected one of {REARRANGEMENTS}"
        )
