"""
Experiment Configuration
========================

This module defines `ExperimentConfig`, everything one experiment run needs.
It converts to and from plain JSON types without loss.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError
from .experiment_keys import ExperimentKinds, ToleranceKeys
from .matrix_sequence import DEFAULT_TAIL_WINDOW

DEFAULT_M_GRID = (1, 2, 3, 4, 5, 6)
DEFAULT_SYMBOL_GRID = (256, 256)
DEFAULT_OUTPUT_DIR = "glt_lab_output"


@dataclass
class ExperimentConfig:
    """
    Configuration of a single experiment.

    Attributes:
        kind: One of `ExperimentKinds.ALL`.
        pair: Builder spec of the main pair.
        other: Builder spec of the second pair (dacs, dm).
        pairs: Builder specs for the isometry experiment.
        symbol: Symbol expression (pm, density).
        family: Family spec for the splice experiment.
        n_grid: Matrix orders.
        m_grid: Family indices.
        symbol_grid: (N_x, N_theta) of the symbol sampling grid.
        tail_window: Trailing grid points forming the tail estimate; clipped
            to the length of n_grid when a configuration is built.
        tolerances: Named tolerances, see `ToleranceKeys`.
        seed: Seed for randomized perturbations.
        max_workers: Threads for ladder evaluation.
        output_dir: Where report.json and the CSV are written.
        use_cache: Whether to read and write the result cache.
    """

    kind: str
    pair: Optional[Dict[str, Any]] = None
    other: Optional[Dict[str, Any]] = None
    pairs: Optional[List[Dict[str, Any]]] = None
    symbol: Optional[str] = None
    family: Optional[Dict[str, Any]] = None
    n_grid: Tuple[int, ...] = ()
    m_grid: Tuple[int, ...] = DEFAULT_M_GRID
    symbol_grid: Tuple[int, int] = DEFAULT_SYMBOL_GRID
    tail_window: int = DEFAULT_TAIL_WINDOW
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(ToleranceKeys.DEFAULTS))
    seed: int = 0
    max_workers: int = 1
    output_dir: str = DEFAULT_OUTPUT_DIR
    use_cache: bool = True

    # Fields that do not influence results and stay out of the config hash.
    RUNTIME_FIELDS = ("max_workers", "output_dir", "use_cache")

    def validate(self) -> None:
        """
        Checks the configuration invariants.

        Raises:
            ConfigError: On an unknown kind, malformed grid, bad tolerance or
                missing builder spec.
        """
        if self.kind not in ExperimentKinds.ALL:
            raise ConfigError(
                f"Unknown experiment '{self.kind}', expected one of {', '.join(ExperimentKinds.ALL)}"
            )
        for name in ("n_grid", "m_grid"):
            grid = getattr(self, name)
            if not grid:
                raise ConfigError(f"{name} must not be empty")
            if any(not isinstance(v, int) or v < 1 for v in grid):
                raise ConfigError(f"{name} entries must be positive integers: {list(grid)}")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be strictly increasing: {list(grid)}")
        if len(self.symbol_grid) != 2 or any(v < 1 for v in self.symbol_grid):
            raise ConfigError(f"symbol_grid must be two positive sizes: {list(self.symbol_grid)}")
        if not 1 <= self.tail_window <= len(self.n_grid):
            raise ConfigError(f"tail_window must lie in [1, {len(self.n_grid)}]")
        for name, value in self.tolerances.items():
            if name not in ToleranceKeys.DEFAULTS:
                raise ConfigError(f"Unknown tolerance '{name}'")
            if not value > 0:
                raise ConfigError(f"Tolerance '{name}' must be positive, got {value}")
        if self.max_workers < 1:
            raise ConfigError("max_workers must be at least 1")

        needs_pair = (
            ExperimentKinds.RHO,
            ExperimentKinds.DACS,
            ExperimentKinds.DM,
            ExperimentKinds.CHECK_SYMBOL,
            ExperimentKinds.CHECK_RHO_PM,
        )
        if self.kind in needs_pair and self.pair is None:
            raise ConfigError(f"Experiment '{self.kind}' needs a 'pair' spec")
        if self.kind in (ExperimentKinds.DACS, ExperimentKinds.DM) and self.other is None:
            raise ConfigError(f"Experiment '{self.kind}' needs an 'other' spec")
        if self.kind == ExperimentKinds.DENSITY and self.symbol is None:
            raise ConfigError("Experiment 'density' needs a 'symbol' expression")
        if self.kind == ExperimentKinds.PM and self.symbol is None and self.pair is None:
            raise ConfigError("Experiment 'pm' needs a 'symbol' expression or a 'pair' spec")
        if self.kind == ExperimentKinds.SPLICE and self.family is None:
            raise ConfigError("Experiment 'splice' needs a 'family' spec")

    def tolerance(self, name: str) -> float:
        return self.tolerances.get(name, ToleranceKeys.DEFAULTS[name])

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["n_grid"] = list(self.n_grid)
        data["m_grid"] = list(self.m_grid)
        data["symbol_grid"] = list(self.symbol_grid)
        return data

    def result_fields(self) -> Dict[str, Any]:
        """`to_dict()` without the fields that only affect how a run executes."""
        data = self.to_dict()
        for name in self.RUNTIME_FIELDS:
            data.pop(name)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        Builds a configuration from JSON data.

        Raises:
            ConfigError: On unknown keys or wrongly typed values.
        """
        if not isinstance(data, dict):
            raise ConfigError("Experiment configuration must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {sorted(unknown)}")
        if "kind" not in data:
            raise ConfigError("Configuration has no experiment 'kind'")

        values = dict(data)
        try:
            for name in ("n_grid", "m_grid", "symbol_grid"):
                if name in values:
                    values[name] = tuple(int(v) for v in values[name])
            for name in ("tail_window", "seed", "max_workers"):
                if name in values:
                    values[name] = int(values[name])
            if "tolerances" in values:
                tolerances = dict(ToleranceKeys.DEFAULTS)
                tolerances.update({k: float(v) for k, v in values["tolerances"].items()})
                values["tolerances"] = tolerances
        except (TypeError, ValueError, AttributeError) as e:
            raise ConfigError(f"Malformed configuration value: {e}")
        return cls(**values)
