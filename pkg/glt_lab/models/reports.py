"""
Report Models
=============

This module defines the result records produced by the verification service
and the experiment runner. Every report serializes to plain JSON types with
`to_dict()`.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from .errors import InvalidInputError
from .matrix_sequence import CauchyReport, LadderReport


@dataclass(frozen=True)
class DistributionReport:
    """
    Comparison of the singular value distribution of a sequence with |k|.

    Attributes:
        n_grid: Orders that were evaluated.
        ks_values: KS distance between the empirical CDF of sigma(A_n) and the
            CDF of |k| on the sample grid, one per n.
        functional_gaps: Per n, |(1/n) sum F(sigma_i) - mean F(|k|)| for every
            hat function of the catalog.
        verdict: Tail KS <= ks tolerance.
        functional_verdict: Tail max functional gap <= functional tolerance.
        tolerances: The tolerances used.
        label: What was compared.
    """

    n_grid: Tuple[int, ...]
    ks_values: Tuple[float, ...]
    functional_gaps: Tuple[Tuple[float, ...], ...]
    verdict: bool
    functional_verdict: bool
    tolerances: Dict[str, float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if len(self.ks_values) != len(self.n_grid) or len(self.functional_gaps) != len(self.n_grid):
            raise InvalidInputError("Distribution report lengths do not match the n grid")

    @property
    def max_functional_gaps(self) -> Tuple[float, ...]:
        return tuple(max(gaps) if gaps else 0.0 for gaps in self.functional_gaps)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "n_grid": list(self.n_grid),
            "ks_values": list(self.ks_values),
            "functional_gaps": [list(gaps) for gaps in self.functional_gaps],
            "verdict": self.verdict,
            "functional_verdict": self.functional_verdict,
            "tolerances": dict(self.tolerances),
        }


@dataclass(frozen=True)
class RhoPmReport:
    """
    rho-hat tail of a sequence against p_m-hat of its symbol.

    `rho_excess` and `pm_excess` are the one-sided differences clipped at 0:
    a positive `rho_excess` means the sequence side came out larger.
    """

    ladder: LadderReport
    rho_tail: float
    p_m: float
    gap: float
    verdict: bool
    tol: float
    rho_excess: float = 0.0
    pm_excess: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ladder": self.ladder.to_dict(),
            "rho_tail": self.rho_tail,
            "p_m": self.p_m,
            "gap": self.gap,
            "rho_excess": self.rho_excess,
            "pm_excess": self.pm_excess,
            "verdict": self.verdict,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class IsometryReport:
    """d_acs-hat between two sequences against d_m-hat between their symbols."""

    first: str
    second: str
    d_acs: float
    d_m: float
    gap: float
    verdict: bool
    tol: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "first": self.first,
            "second": self.second,
            "d_acs": self.d_acs,
            "d_m": self.d_m,
            "gap": self.gap,
            "verdict": self.verdict,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class QuotientReport:
    """d_acs-hat before and after adding zero-distributed perturbations."""

    base: float
    perturbed: float
    gap: float
    verdict: bool
    tol: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "base": self.base,
            "perturbed": self.perturbed,
            "gap": self.gap,
            "verdict": self.verdict,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class CorrespondenceReport:
    """Cauchy moduli of a pair family, sequence side and symbol side."""

    sequences: CauchyReport
    symbols: CauchyReport
    max_gap: float
    verdict: bool
    tol: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sequences": self.sequences.to_dict(),
            "symbols": self.symbols.to_dict(),
            "max_gap": self.max_gap,
            "verdict": self.verdict,
            "tol": self.tol,
        }


@dataclass
class RunReport:
    """
    Everything one experiment run produced.

    Attributes:
        experiment: The experiment kind.
        config: Canonical echo of the configuration.
        config_hash: SHA-256 of the canonical configuration.
        results: Serialized per-operation reports.
        verdict: Overall verdict, or None for non-verdict experiments.
        wall_time: Seconds spent.
        app_version: Version of the package that produced the run.
        cached: True when the report was served from the cache.
        error: Message of the error that ended the run early, if any.
    """

    experiment: str
    config: Dict[str, Any]
    config_hash: str
    results: Dict[str, Any] = field(default_factory=dict)
    verdict: Optional[bool] = None
    wall_time: float = 0.0
    app_version: str = "dev"
    cached: bool = False
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "config_hash": self.config_hash,
            "results": self.results,
            "verdict": self.verdict,
            "wall_time": self.wall_time,
            "app_version": self.app_version,
            "cached": self.cached,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunReport":
        try:
            return cls(
                experiment=data["experiment"],
                config=data["config"],
                config_hash=data["config_hash"],
                results=data.get("results", {}),
                verdict=data.get("verdict"),
                wall_time=data.get("wall_time", 0.0),
                app_version=data.get("app_version", "dev"),
                cached=data.get("cached", False),
                error=data.get("error"),
            )
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"Malformed run report: {e}")
