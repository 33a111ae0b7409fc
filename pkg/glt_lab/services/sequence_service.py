"""
Sequence Service
================

This module provides `SequenceService`, the space of matrix sequences with its
a.c.s. pseudometric. It evaluates the capped p-hat of single matrices, ladders
of p-hat along a grid of orders (the finite stand-in for rho and d_acs),
detects Cauchy behaviour of doubly indexed families, builds the spliced limit
of a Cauchy family and checks explicit a.c.s. witnesses.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..models.errors import InvalidInputError, NotCauchyError
from ..models.matrix import as_matrix
from ..models.matrix_sequence import (
    DEFAULT_TAIL_WINDOW,
    AcsFamily,
    AcsWitness,
    CauchyReport,
    LadderReport,
    MatrixSequence,
    SpliceResult,
    WitnessVerdict,
    splice_index,
    tail_suprema,
    validate_grid,
)
from .ladder_worker import LadderWorker
from .matrix_service import MatrixService

logger = logging.getLogger(__name__)

DEFAULT_N_GRID = (64, 128, 256, 512, 1024, 2048, 4096)


def capped_scan(values: NDArray[np.float64]) -> float:
    """
    Returns min(1, min_i {(i-1)/N + v_i}) for values sorted non-increasing.

    This is the shared kernel of p-hat on matrices and p_m-hat on symbol
    samples; both must call it so the two agree bit for bit.
    """
    count = values.shape[0]
    if count == 0:
        raise InvalidInputError("Cannot scan an empty set of values")
    terms = np.arange(count, dtype=np.float64) / count + values
    return float(min(1.0, terms.min()))


def cauchy_verdict(
    m_grid: Sequence[int], modulus: Sequence[Sequence[float]], tol: float
) -> bool:
    """
    Decides whether a pairwise modulus describes a Cauchy sequence.

    The sup over later members must not grow with s, and at the last compared
    member it must fall below 2^-m + tol.
    """
    sup_tail = tail_suprema(modulus)
    monotone = all(b <= a + 1e-12 for a, b in zip(sup_tail, sup_tail[1:]))
    return monotone and sup_tail[-1] <= 2.0 ** (-m_grid[-2]) + tol


class SequenceService:
    """
    Computes a.c.s. distances between matrix sequences.

    Ladder evaluations are independent per order and are dispatched through a
    `LadderWorker`.
    """

    # Entrywise tolerance for checking a witness splitting.
    SPLIT_TOL = 1e-10

    def __init__(
        self,
        matrix_service: Optional[MatrixService] = None,
        max_workers: int = 1,
        cauchy_tol: float = 0.05,
        rank_tol: float = 1e-10,
        progress_callback: Optional[Callable[[int], None]] = None,
    ):
        if cauchy_tol < 0 or rank_tol < 0:
            raise InvalidInputError("Tolerances must be non-negative")
        self._matrices = matrix_service or MatrixService()
        self._worker = LadderWorker(max_workers, progress_callback)
        self._cauchy_tol = cauchy_tol
        self._rank_tol = rank_tol

    @property
    def matrix_service(self) -> MatrixService:
        return self._matrices

    def p_hat(self, matrix: ArrayLike) -> float:
        """
        Capped p of a single matrix: min(1, min_i {(i-1)/n + sigma_i}).

        The cap is the virtual term i = n+1 with sigma_{n+1} = 0.
        """
        return capped_scan(self._matrices.singular_values(matrix))

    def rho_ladder(
        self,
        sequence: MatrixSequence,
        n_grid: Sequence[int] = DEFAULT_N_GRID,
        tail_window: int = DEFAULT_TAIL_WINDOW,
    ) -> LadderReport:
        """
        Evaluates p-hat of the sequence at every order of the grid.

        Raises:
            InvalidInputError: If the grid or window is malformed.
            GeneratorError: If the sequence fails at some n (carried on the error).
        """
        grid = validate_grid(n_grid, "n_grid")
        self._check_window(grid, tail_window)

        logger.debug(f"rho ladder for {sequence.label} on {grid}")
        values = self._worker.run(lambda n: self.p_hat(sequence(n)), grid)
        return LadderReport(grid, tuple(values), tail_window, f"rho({sequence.label})")

    def d_acs_ladder(
        self,
        first: MatrixSequence,
        second: MatrixSequence,
        n_grid: Sequence[int] = DEFAULT_N_GRID,
        tail_window: int = DEFAULT_TAIL_WINDOW,
    ) -> LadderReport:
        """rho ladder of the difference sequence; symmetric in its arguments."""
        ladder = self.rho_ladder(first.minus(second), n_grid, tail_window)
        return LadderReport(
            ladder.index_grid,
            ladder.values,
            tail_window,
            f"d_acs({first.label}, {second.label})",
        )

    def acs_equivalent(
        self,
        first: MatrixSequence,
        second: MatrixSequence,
        n_grid: Sequence[int] = DEFAULT_N_GRID,
        tail_window: int = DEFAULT_TAIL_WINDOW,
        tol: float = 0.02,
    ) -> bool:
        """True when the sequences differ by a zero-distributed sequence."""
        return self.d_acs_ladder(first, second, n_grid, tail_window).tail_estimate <= tol

    def is_cauchy(
        self,
        family: AcsFamily,
        m_grid: Sequence[int],
        n_grid: Sequence[int] = DEFAULT_N_GRID,
        tail_window: int = DEFAULT_TAIL_WINDOW,
    ) -> CauchyReport:
        """
        Estimates d_acs between every pair of members and judges Cauchy behaviour.

        A false verdict is a result, not an error.

        Raises:
            InvalidInputError: If m_grid has fewer than 3 entries.
        """
        members = validate_grid(m_grid, "m_grid")
        if len(members) < 3:
            raise InvalidInputError("is_cauchy needs at least 3 members")
        grid = validate_grid(n_grid, "n_grid")
        self._check_window(grid, tail_window)

        pairs = [
            (s, t) for s in range(len(members)) for t in range(s + 1, len(members))
        ]
        items = [(s, t, n) for s, t in pairs for n in grid]

        def evaluate(item: Tuple[int, int, int]) -> float:
            s, t, n = item
            return self.p_hat(family(members[s], n) - family(members[t], n))

        flat = self._worker.run(evaluate, items)

        size = len(members)
        modulus = [[0.0] * size for _ in range(size)]
        for index, (s, t) in enumerate(pairs):
            ladder = flat[index * len(grid) : (index + 1) * len(grid)]
            tail = max(ladder[-tail_window:])
            modulus[s][t] = modulus[t][s] = tail

        verdict = cauchy_verdict(members, modulus, self._cauchy_tol)
        logger.info(f"Cauchy check for {family.label}: verdict={verdict}")
        return CauchyReport(members, tuple(tuple(row) for row in modulus), verdict)

    def splice_limit(
        self,
        family: AcsFamily,
        m_grid: Sequence[int],
        search_grid: Sequence[int] = DEFAULT_N_GRID,
        target_rate: Optional[Callable[[int], float]] = None,
    ) -> SpliceResult:
        """
        Builds the spliced limit A_n = B_{n,m} for T_m <= n < T_{m+1}.

        For consecutive members the threshold is the smallest order from
        which p-hat(B_m - B_next) stays within 2 * target_rate(m) through the
        rest of the search grid. Thresholds are made non-decreasing; at order n
        the last member whose threshold is <= n is used.

        Raises:
            NotCauchyError: If some consecutive pair never settles on the search grid.
        """
        members = validate_grid(m_grid, "m_grid")
        orders = validate_grid(search_grid, "search_grid")
        rate = target_rate or (lambda m: 2.0 ** (-m))

        thresholds = [orders[0]]
        if len(members) > 1:
            items = [(j, n) for j in range(len(members) - 1) for n in orders]

            def evaluate(item: Tuple[int, int]) -> float:
                j, n = item
                return self.p_hat(family(members[j], n) - family(members[j + 1], n))

            flat = self._worker.run(evaluate, items)

            for j in range(len(members) - 1):
                row = flat[j * len(orders) : (j + 1) * len(orders)]
                bound = 2.0 * rate(members[j]) + 1e-12
                found = None
                for p in reversed(range(len(orders))):
                    if row[p] > bound:
                        break
                    found = orders[p]
                if found is None:
                    raise NotCauchyError(
                        f"No threshold within the search grid for m={members[j]}: "
                        f"p-hat {row[-1]:.3g} > {bound:.3g}",
                        members[j],
                    )
                thresholds.append(max(thresholds[-1], found))

        frozen = tuple(thresholds)
        logger.info(f"Splice thresholds for {family.label}: {frozen}")

        def spliced(n: int):
            return family(members[splice_index(frozen, n)], n)

        sequence = MatrixSequence(spliced, f"splice({family.label})")
        return SpliceResult(sequence, members, frozen)

    def verify_acs_witness(
        self,
        sequence: MatrixSequence,
        family: AcsFamily,
        witness: AcsWitness,
        m_grid: Sequence[int],
        n_grid: Sequence[int] = DEFAULT_N_GRID,
    ) -> List[WitnessVerdict]:
        """
        Checks A_n = B_{n,m} + N + R with ||N|| <= omega(m), rank(R) <= n c(m)
        for every n > n_m in the grid, reporting the first violation per m.

        Raises:
            InvalidInputError: If the witness is malformed (negative or
                increasing bounds, splitting matrices of the wrong order).
        """
        members = validate_grid(m_grid, "m_grid")
        grid = validate_grid(n_grid, "n_grid")

        omegas = [float(witness.omega(m)) for m in members]
        fractions = [float(witness.c(m)) for m in members]
        for name, bounds in (("omega", omegas), ("c", fractions)):
            if any(b < 0 for b in bounds):
                raise InvalidInputError(f"Witness bound {name} must be non-negative")
            if any(b > a for a, b in zip(bounds, bounds[1:])):
                raise InvalidInputError(f"Witness bound {name} must be non-increasing")

        def check(index: int) -> WitnessVerdict:
            m = members[index]
            start = witness.thresholds(m)
            for n in grid:
                if n <= start:
                    continue
                small_norm, small_rank = witness.splitting(m, n)
                small_norm = as_matrix(small_norm)
                small_rank = as_matrix(small_rank)
                if small_norm.shape != (n, n) or small_rank.shape != (n, n):
                    raise InvalidInputError(
                        f"Witness splitting has the wrong order at m={m}, n={n}"
                    )

                residual = sequence(n) - family(m, n) - small_norm - small_rank
                mismatch = float(np.max(np.abs(residual)))
                if mismatch > self.SPLIT_TOL:
                    return WitnessVerdict(
                        m, False, f"splitting off by {mismatch:.3g} entrywise", n
                    )

                norm = self._matrices.spectral_norm(small_norm)
                if norm > omegas[index] * (1 + self.SPLIT_TOL) + 1e-14:
                    return WitnessVerdict(
                        m, False, f"||N|| = {norm:.6g} > omega = {omegas[index]:.6g}", n
                    )

                rank = self._matrices.numerical_rank(small_rank, self._rank_tol)
                if rank > n * fractions[index]:
                    return WitnessVerdict(
                        m, False, f"rank(R) = {rank} > n c = {n * fractions[index]:.6g}", n
                    )
            return WitnessVerdict(m, True)

        verdicts = self._worker.run(check, list(range(len(members))))
        for verdict in verdicts:
            if not verdict.passed:
                logger.info(f"Witness violation at m={verdict.m}, n={verdict.n}: {verdict.violation}")
        return verdicts

    @staticmethod
    def _check_window(grid: Sequence[int], tail_window: int) -> None:
        if not 1 <= tail_window <= len(grid):
            raise InvalidInputError(
                f"tail_window must lie in [1, {len(grid)}], got {tail_window}"
            )
