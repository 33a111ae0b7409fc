"""
Verify Service
==============

This module provides `VerifyService`, the numerical witnesses that tie the
sequence side to the symbol side: singular value distribution checks against
a symbol (KS distance on a fixed threshold grid plus a hat-function catalog),
the rho = p_m comparison, the isometry d_acs = d_m on GLT pairs, invariance
under zero-distributed perturbations and the Cauchy correspondence between a
pair family and its symbols.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..models.errors import InvalidInputError
from ..models.glt_pair import GltPair
from ..models.matrix_sequence import AcsFamily, validate_grid
from ..models.reports import (
    CorrespondenceReport,
    DistributionReport,
    IsometryReport,
    QuotientReport,
    RhoPmReport,
)
from ..models.symbol_function import SymbolFunction
from .ladder_worker import LadderWorker
from .sequence_service import SequenceService
from .symbol_service import DEFAULT_GRID, SymbolService

logger = logging.getLogger(__name__)

KS_TOL = 0.05
FUNCTIONAL_TOL = 0.05
RHO_PM_TOL = 0.02
ISOMETRY_TOL = 0.05
QUOTIENT_TOL = 0.02

T_GRID_SIZE = 512
HAT_COUNT = 21

DISTRIBUTION_N_GRID = (128, 256, 512, 1024)
RHO_PM_N_GRID = (256, 512, 1024, 2048)
ISOMETRY_N_GRID = (2048,)


@dataclass(frozen=True)
class HatFunction:
    """
    Continuous, compactly supported test function: the tent of height 1 at
    `center` vanishing outside [center - half_width, center + half_width].
    """

    center: float
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise InvalidInputError(f"Hat half width must be positive, got {self.half_width}")

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        distance = np.abs(np.asarray(t, dtype=np.float64) - self.center)
        return np.maximum(0.0, 1.0 - distance / self.half_width)


def hat_catalog(upper: float, count: int = HAT_COUNT) -> List[HatFunction]:
    """
    `count` hats with centers evenly spread over [0, upper]; the width adapts
    to the spacing so neighbouring hats overlap by half.
    """
    if count < 2:
        raise InvalidInputError("The hat catalog needs at least 2 hats")
    span = max(float(upper), 1e-12)
    centers = np.linspace(0.0, span, count)
    width = span / (count - 1)
    return [HatFunction(float(c), width) for c in centers]


class VerifyService:
    """
    Checks the identities that relate matrix sequences and their symbols.
    """

    def __init__(
        self,
        sequence_service: Optional[SequenceService] = None,
        symbol_service: Optional[SymbolService] = None,
        max_workers: int = 1,
        progress_callback: Optional[Callable[[int], None]] = None,
    ):
        self._sequences = sequence_service or SequenceService(max_workers=max_workers)
        self._symbols = symbol_service or SymbolService()
        self._worker = LadderWorker(max_workers, progress_callback)

    def empirical_functional(self, matrix: ArrayLike, test_function: Callable) -> float:
        """(1/n) sum_i F(sigma_i(A))."""
        sigma = self._sequences.matrix_service.singular_values(matrix)
        return float(np.mean(test_function(sigma)))

    def symbol_functional(
        self,
        symbol: SymbolFunction,
        test_function: Callable,
        n_x: int = DEFAULT_GRID[0],
        n_theta: int = DEFAULT_GRID[1],
    ) -> float:
        """Equal-weight average of F(|k|) over the midpoint nodes."""
        samples = self._symbols.sample_abs(symbol, n_x, n_theta)
        return float(np.mean(test_function(np.sort(samples.values))))

    def check_sigma_distribution(
        self,
        pair: GltPair,
        n_grid: Sequence[int] = DISTRIBUTION_N_GRID,
        n_x: int = DEFAULT_GRID[0],
        n_theta: int = DEFAULT_GRID[1],
        tol: float = KS_TOL,
        functional_tol: float = FUNCTIONAL_TOL,
        tail_window: int = 1,
        reference_cdf: Optional[Callable[[NDArray[np.float64]], ArrayLike]] = None,
    ) -> DistributionReport:
        """
        Compares the singular values of the sequence with |symbol|.

        The KS distance is the largest CDF gap on a 512-point threshold grid
        over [0, max sigma + 1], max sigma taken over every n of the grid. Each hat
        of a 21-hat catalog over the same range gives a functional gap.

        Args:
            pair: The sequence and the claimed symbol.
            n_grid: Matrix orders.
            n_x: Symbol grid size along x.
            n_theta: Symbol grid size along theta.
            tol: KS tolerance for the verdict.
            functional_tol: Tolerance for the functional verdict.
            tail_window: Trailing points the verdicts look at.
            reference_cdf: Closed-form CDF of |k| to compare against instead
                of the sampled symbol (hat gaps still use the samples).

        Returns:
            DistributionReport: KS values, functional gaps and both verdicts.
        """
        if tol <= 0 or functional_tol <= 0:
            raise InvalidInputError("Distribution tolerances must be positive")
        grid = validate_grid(n_grid, "n_grid")
        if not 1 <= tail_window <= len(grid):
            raise InvalidInputError(f"tail_window must lie in [1, {len(grid)}]")

        matrices = self._sequences.matrix_service
        spectra = self._worker.run(
            lambda n: np.sort(matrices.singular_values(pair.sequence(n))), grid
        )
        samples = self._symbols.sample_abs(pair.symbol, n_x, n_theta)
        ordered = np.sort(samples.values)

        upper = max(float(s[-1]) for s in spectra) + 1.0
        t_grid = np.linspace(0.0, upper, T_GRID_SIZE)
        if reference_cdf is not None:
            symbol_cdf = np.asarray(reference_cdf(t_grid), dtype=np.float64)
        else:
            symbol_cdf = self._symbols.abs_cdf(samples, t_grid)

        hats = hat_catalog(upper)
        symbol_means = [float(np.mean(hat(ordered))) for hat in hats]

        ks_values = []
        functional_gaps = []
        for n, sigma in zip(grid, spectra):
            empirical = np.searchsorted(sigma, t_grid, side="right") / sigma.size
            ks_values.append(float(np.max(np.abs(empirical - symbol_cdf))))
            functional_gaps.append(
                tuple(
                    abs(float(np.mean(hat(sigma))) - mean)
                    for hat, mean in zip(hats, symbol_means)
                )
            )
            logger.debug(f"{pair.label}: n={n}, KS={ks_values[-1]:.3g}")

        verdict = max(ks_values[-tail_window:]) <= tol
        functional_verdict = max(max(g) for g in functional_gaps[-tail_window:]) <= functional_tol
        if verdict != functional_verdict:
            logger.warning(
                f"{pair.label}: KS verdict {verdict} disagrees with functional verdict {functional_verdict}"
            )

        return DistributionReport(
            grid,
            tuple(ks_values),
            tuple(functional_gaps),
            verdict,
            functional_verdict,
            {"ks": tol, "functional": functional_tol},
            pair.sequence.label,
        )

    def check_rho_equals_pm(
        self,
        pair: GltPair,
        n_grid: Sequence[int] = RHO_PM_N_GRID,
        n_x: int = DEFAULT_GRID[0],
        n_theta: int = DEFAULT_GRID[1],
        tol: float = RHO_PM_TOL,
        tail_window: int = 1,
    ) -> RhoPmReport:
        """
        Compares the rho-hat tail of the sequence with p_m-hat of its symbol.

        Returns:
            RhoPmReport: Both sides, their gap and one-sided excesses; the
                verdict is gap <= tol.
        """
        if tol <= 0:
            raise InvalidInputError("rho = p_m tolerance must be positive")
        ladder = self._sequences.rho_ladder(pair.sequence, n_grid, tail_window)
        p_m = self._symbols.p_m_hat(self._symbols.sample_abs(pair.symbol, n_x, n_theta))
        rho_tail = ladder.tail_estimate
        gap = abs(rho_tail - p_m)
        logger.info(f"{pair.label}: rho tail {rho_tail:.6g}, p_m {p_m:.6g}, gap {gap:.3g}")
        return RhoPmReport(
            ladder,
            rho_tail,
            p_m,
            gap,
            gap <= tol,
            tol,
            max(0.0, rho_tail - p_m),
            max(0.0, p_m - rho_tail),
        )

    def check_isometry(
        self,
        first: GltPair,
        second: GltPair,
        n_grid: Sequence[int] = ISOMETRY_N_GRID,
        n_x: int = DEFAULT_GRID[0],
        n_theta: int = DEFAULT_GRID[1],
        tol: float = ISOMETRY_TOL,
        tail_window: int = 1,
    ) -> IsometryReport:
        """d_acs-hat between the sequences against d_m-hat between the symbols."""
        d_acs = self._sequences.d_acs_ladder(
            first.sequence, second.sequence, n_grid, tail_window
        ).tail_estimate
        d_m = self._symbols.d_m_hat(first.symbol, second.symbol, n_x, n_theta)
        gap = abs(d_acs - d_m)
        logger.debug(f"Isometry {first.label} / {second.label}: {d_acs:.6g} vs {d_m:.6g}")
        return IsometryReport(first.label, second.label, d_acs, d_m, gap, gap <= tol, tol)

    def check_quotient_invariance(
        self,
        first: GltPair,
        second: GltPair,
        first_zero: GltPair,
        second_zero: GltPair,
        n_grid: Sequence[int] = RHO_PM_N_GRID,
        tol: float = QUOTIENT_TOL,
        tail_window: int = 1,
    ) -> QuotientReport:
        """
        d_acs-hat(A + Z, B + W) against d_acs-hat(A, B) for zero-distributed
        Z and W.
        """
        base = self._sequences.d_acs_ladder(
            first.sequence, second.sequence, n_grid, tail_window
        ).tail_estimate
        perturbed = self._sequences.d_acs_ladder(
            first.sequence.plus(first_zero.sequence),
            second.sequence.plus(second_zero.sequence),
            n_grid,
            tail_window,
        ).tail_estimate
        gap = abs(base - perturbed)
        return QuotientReport(base, perturbed, gap, gap <= tol, tol)

    def check_cauchy_correspondence(
        self,
        pairs: Sequence[GltPair],
        m_grid: Sequence[int],
        n_grid: Sequence[int] = DISTRIBUTION_N_GRID,
        n_x: int = DEFAULT_GRID[0],
        n_theta: int = DEFAULT_GRID[1],
        tol: float = ISOMETRY_TOL,
        tail_window: int = 1,
    ) -> CorrespondenceReport:
        """
        Compares the Cauchy modulus of the sequences of a pair family with the
        modulus of their symbols.

        The verdict holds when both moduli agree entrywise within `tol` and
        both sides reach the same Cauchy verdict.
        """
        members = validate_grid(m_grid, "m_grid")
        if len(pairs) != len(members):
            raise InvalidInputError("Need one pair per entry of m_grid")
        position = {m: j for j, m in enumerate(members)}
        family = AcsFamily(
            lambda m, n: pairs[position[m]].sequence(n), f"pairs({pairs[0].label}, ...)"
        )

        sequences = self._sequences.is_cauchy(family, members, n_grid, tail_window)
        symbols = self._symbols.symbol_is_cauchy(
            [p.symbol for p in pairs], members, n_x, n_theta
        )
        max_gap = max(
            abs(a - b)
            for row_a, row_b in zip(sequences.modulus, symbols.modulus)
            for a, b in zip(row_a, row_b)
        )
        verdict = max_gap <= tol and sequences.verdict == symbols.verdict
        return CorrespondenceReport(sequences, symbols, max_gap, verdict, tol)
