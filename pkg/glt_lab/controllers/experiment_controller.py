"""
Experiment Controller
=====================

This module defines the `ExperimentController`, which turns an
`ExperimentConfig` into GLT pairs, runs the requested experiment through the
services and hands the results to the report writer and the cache.
"""

import logging
import threading
import time
from functools import reduce
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..models.errors import ConfigError, GltLabError
from ..models.experiment_config import ExperimentConfig
from ..models.experiment_keys import ExperimentKinds, SpecKeys, ToleranceKeys
from ..models.glt_pair import FourierData, GltPair, Provenance
from ..models.matrix_sequence import AcsFamily
from ..models.reports import RunReport
from ..models.symbol_function import SymbolFunction
from ..services.config_service import ConfigService, get_app_version
from ..services.expression_parser import ExpressionParser, ParsedExpression
from ..services.glt_service import GltService
from ..services.report_service import ReportService
from ..services.sequence_service import SequenceService
from ..services.symbol_service import SymbolService
from ..services.verify_service import VerifyService

logger = logging.getLogger(__name__)

# Trigonometric degree used for Toeplitz pairs given as expressions.
DEFAULT_TOEPLITZ_DEGREE = 16

ISOMETRY_CATALOG = ("laplacian", "shift", "ramp", "ramp_laplacian", "identity")

Handler = Callable[[ExperimentConfig, Dict[str, Any]], Optional[bool]]


class ExperimentController:
    """
    Runs one experiment per call to `run`.

    Results are collected into a plain dict while the experiment proceeds, so
    whatever was computed before an error is still written out.
    """

    def __init__(
        self,
        config_service: ConfigService,
        report_service: ReportService,
        glt_service: Optional[GltService] = None,
        parser: Optional[ExpressionParser] = None,
        progress_callback: Optional[Callable[[int], None]] = None,
    ):
        self._config_service = config_service
        self._report_service = report_service
        self._glt = glt_service or GltService()
        self._parser = parser or ExpressionParser()
        self._progress_callback = progress_callback
        self._configure_services(ExperimentConfig(ExperimentKinds.RHO))

        self._handlers: Dict[str, Handler] = {
            ExperimentKinds.RHO: self._run_rho,
            ExperimentKinds.PM: self._run_pm,
            ExperimentKinds.DACS: self._run_dacs,
            ExperimentKinds.DM: self._run_dm,
            ExperimentKinds.CHECK_SYMBOL: self._run_check_symbol,
            ExperimentKinds.CHECK_RHO_PM: self._run_check_rho_pm,
            ExperimentKinds.SPLICE: self._run_splice,
            ExperimentKinds.DENSITY: self._run_density,
            ExperimentKinds.ISOMETRY: self._run_isometry,
        }

    def run(self, config: ExperimentConfig) -> RunReport:
        """
        Executes the experiment named by the configuration and writes
        `report.json` and `<experiment>.csv` to the output directory.

        Returns:
            RunReport: The (possibly cached) report.

        Raises:
            GltLabError: When the experiment fails; partial results are
                written first.
        """
        config.validate()
        config_hash = self._config_service.hash_config(config)

        if config.use_cache:
            cached = self._config_service.load_cached(config)
            if cached is not None:
                self._report_service.write_run(cached, config.output_dir)
                return cached

        self._configure_services(config)
        report = RunReport(
            experiment=config.kind,
            config=config.to_dict(),
            config_hash=config_hash,
            app_version=get_app_version(),
        )
        logger.info(f"Running {config.kind} ({config_hash[:12]})")
        start = time.perf_counter()
        try:
            report.verdict = self._handlers[config.kind](config, report.results)
        except (GltLabError, OSError) as e:
            report.error = str(e)
            report.wall_time = time.perf_counter() - start
            logger.error(f"{config.kind} failed: {e}")
            self._report_service.write_run(report, config.output_dir)
            raise
        except Exception as e:
            report.error = f"{type(e).__name__}: {e}"
            report.wall_time = time.perf_counter() - start
            logger.exception(f"{config.kind} failed unexpectedly")
            self._report_service.write_run(report, config.output_dir)
            raise GltLabError(f"{config.kind} failed: {report.error}") from e

        report.wall_time = time.perf_counter() - start
        logger.info(f"{config.kind} finished in {report.wall_time:.2f}s, verdict={report.verdict}")
        self._report_service.write_run(report, config.output_dir)
        if config.use_cache:
            self._config_service.store_cached(report)
        return report

    def _configure_services(self, config: ExperimentConfig) -> None:
        self._sequences = SequenceService(
            max_workers=config.max_workers,
            cauchy_tol=config.tolerance(ToleranceKeys.CAUCHY),
            rank_tol=config.tolerance(ToleranceKeys.RANK),
            progress_callback=self._progress_callback,
        )
        self._symbols = SymbolService(cauchy_tol=config.tolerance(ToleranceKeys.CAUCHY))
        self._verify = VerifyService(self._sequences, self._symbols, config.max_workers)

    # --- Pair specs ---

    def build_pair(self, spec: Dict[str, Any], seed: int = 0) -> GltPair:
        """
        Builds a GltPair from a builder spec (see `SpecKeys`).

        Raises:
            ConfigError: If the pair spec names no builder or more than one, or
                holds a value of the wrong type.
        """
        if not isinstance(spec, dict):
            raise ConfigError(f"A pair spec must be an object, got {spec!r}")
        try:
            return self._build_pair(spec, seed)
        except GltLabError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Malformed pair spec {spec!r}: {e}")

    def _build_pair(self, spec: Dict[str, Any], seed: int) -> GltPair:
        builders = [key for key in SpecKeys.BUILDERS if key in spec]
        if len(builders) != 1:
            raise ConfigError(f"A pair spec needs exactly one of {SpecKeys.BUILDERS}, got {builders}")
        builder = builders[0]
        value = spec[builder]

        if builder == SpecKeys.TOEPLITZ:
            pair = self._glt.toeplitz_pair(self._expression_data(spec), f"T({value})")
        elif builder == SpecKeys.COEFFICIENTS:
            pair = self._glt.toeplitz_pair(self._coefficient_data(spec))
        elif builder == SpecKeys.DIAG:
            parsed = self._parse(value)
            pair = self._glt.diag_pair(parsed.to_diag_function(), value)
        elif builder == SpecKeys.ZERO:
            pair = self._glt.zero_pair(value, spec.get(SpecKeys.RATE, "zero"), int(spec.get(SpecKeys.SEED, seed)))
        elif builder in (SpecKeys.SUM, SpecKeys.PRODUCT):
            if not isinstance(value, list) or len(value) < 2:
                raise ConfigError(f"'{builder}' needs a list of at least two specs")
            operands = [self.build_pair(item, seed) for item in value]
            combine = self._glt.pair_add if builder == SpecKeys.SUM else self._glt.pair_mul
            pair = reduce(combine, operands)
        elif builder == SpecKeys.SCALE:
            if SpecKeys.OF not in spec:
                raise ConfigError("'scale' needs an 'of' spec")
            pair = self._glt.pair_scale(_complex(value), self.build_pair(spec[SpecKeys.OF], seed))
        else:
            catalog = self._glt.catalog()
            if value not in catalog:
                raise ConfigError(f"Unknown catalog pair '{value}', expected one of {sorted(catalog)}")
            pair = catalog[value]

        if SpecKeys.SYMBOL in spec:
            pair = pair.with_symbol(self._parse(spec[SpecKeys.SYMBOL]).to_symbol())
        if SpecKeys.REARRANGE in spec:
            pair = pair.with_symbol(
                self._symbols.rearrange(pair.symbol, spec[SpecKeys.REARRANGE], float(spec.get(SpecKeys.OFFSET, 0.0)))
            )
        return pair

    def _parse(self, text: Any) -> ParsedExpression:
        if not isinstance(text, str):
            raise ConfigError(f"Expected an expression string, got {text!r}")
        return self._parser.parse(text)

    def _expression_data(self, spec: Dict[str, Any]) -> FourierData:
        parsed = self._parse(spec[SpecKeys.TOEPLITZ])
        function = parsed.to_theta_function()
        degree = int(spec.get(SpecKeys.DEGREE, DEFAULT_TOEPLITZ_DEGREE))
        theta = np.linspace(-np.pi, np.pi, 257)
        real = spec.get(SpecKeys.REAL, bool(np.all(np.imag(function(theta)) == 0)))
        return self._glt.fourier_coefficients(function, degree, real=bool(real))

    @staticmethod
    def _coefficient_data(spec: Dict[str, Any]) -> FourierData:
        table = spec[SpecKeys.COEFFICIENTS]
        if not isinstance(table, dict):
            raise ConfigError("'coefficients' must map frequencies to values")
        try:
            coefficients = {int(k): _complex(v) for k, v in table.items()}
        except ValueError as e:
            raise ConfigError(f"Malformed Fourier coefficient: {e}")
        return FourierData(coefficients, bool(spec.get(SpecKeys.REAL, False)))

    def _main_symbol(self, config: ExperimentConfig) -> SymbolFunction:
        if config.symbol is not None:
            return self._parse(config.symbol).to_symbol()
        return self.build_pair(config.pair or {}, config.seed).symbol

    # --- Experiments ---

    def _run_rho(self, config: ExperimentConfig, results: Dict[str, Any]) -> Optional[bool]:
        pair = self.build_pair(config.pair or {}, config.seed)
        results["provenance"] = pair.provenance.to_dict()
        ladder = self._sequences.rho_ladder(pair.sequence, config.n_grid, config.tail_window)
        results["ladder"] = ladder.to_dict()
        results["table"] = _table(["n", "rho_hat"], zip(ladder.index_grid, ladder.values))
        return None

    def _run_pm(self, config: ExperimentConfig, results: Dict[str, Any]) -> Optional[bool]:
        symbol = self._main_symbol(config)
        rows = []
        for n_x, n_theta in _refinements(config.symbol_grid):
            value = self._symbols.p_m_hat(self._symbols.sample_abs(symbol, n_x, n_theta))
            rows.append((n_x, n_theta, value))
            results["table"] = _table(["n_x", "n_theta", "p_m_hat"], rows)
        results["p_m"] = rows[-1][2]
        return None

    def _run_dacs(self, config: ExperimentConfig, results: Dict[str, Any]) -> Optional[bool]:
        first = self.build_pair(config.pair or {}, config.seed)
        second = self.build_pair(config.other or {}, config.seed + 1)
        ladder = self._sequences.d_acs_ladder(first.sequence, second.sequence, config.n_grid, config.tail_window)
        results["ladder"] = ladder.to_dict()
        results["acs_equivalent"] = ladder.tail_estimate <= config.tolerance(ToleranceKeys.ISOMETRY)
        results["table"] = _table(["n", "d_acs_hat"], zip(ladder.index_grid, ladder.values))
        return None

    def _run_dm(self, config: ExperimentConfig, results: Dict[str, Any]) -> Optional[bool]:
        first = self.build_pair(config.pair or {}, config.seed).symbol
        second = self.build_pair(config.other or {}, config.seed + 1).symbol
        rows = []
        for n_x, n_theta in _refinements(config.symbol_grid):
            rows.append((n_x, n_theta, self._symbols.d_m_hat(first, second, n_x, n_theta)))
            results["table"] = _table(["n_x", "n_theta", "d_m_hat"], rows)
        results["d_m"] = rows[-1][2]
        return None

    def _run_check_symbol(self, config: ExperimentConfig, results: Dict[str, Any]) -> Optional[bool]:
        pair = self.build_pair(config.pair or {}, config.seed)
        n_x, n_theta = config.symbol_grid
        report = self._verify.check_sigma_distribution(
            pair,
            config.n_grid,
            n_x,
            n_theta,
            config.tolerance(ToleranceKeys.KS),
            config.tolerance(ToleranceKeys.FUNCTIONAL),
            config.tail_window,
        )
        results["distribution"] = report.to_dict()
        results["table"] = _table(
            ["n", "ks", "max_functional_gap"],
            zip(report.n_grid, report.ks_values, report.max_functional_gaps),
        )
        return report.verdict

    def _run_check_rho_pm(self, config: ExperimentConfig, results: Dict[str, Any]) -> Optional[bool]:
        pair = self.build_pair(config.pair or {}, config.seed)
        n_x, n_theta = config.symbol_grid
        report = self._verify.check_rho_equals_pm(
            pair, config.n_grid, n_x, n_theta, config.tolerance(ToleranceKeys.RHO_PM), config.tail_window
        )
        results["rho_pm"] = report.to_dict()
        results["table"] = _table(
            ["n", "rho_hat", "p_m_hat", "gap"],
            [
                (n, value, report.p_m, abs(value - report.p_m))
                for n, value in zip(report.ladder.index_grid, report.ladder.values)
            ],
        )
        return report.verdict

    def _run_splice(self, config: ExperimentConfig, results: Dict[str, Any]) -> Optional[bool]:
        family = self._build_family(config.family or {}, config.seed)
        cauchy = self._sequences.is_cauchy(family, config.m_grid, config.n_grid, config.tail_window)
        results["cauchy"] = cauchy.to_dict()
        if not cauchy.verdict:
            logger.warning(f"Splicing {family.label} although its Cauchy verdict is false")

        splice = self._sequences.splice_limit(family, config.m_grid, config.n_grid)
        results["splice"] = splice.to_dict()

        rows = []
        passed = cauchy.verdict
        for m, threshold in zip(splice.m_grid, splice.thresholds):
            tail = self._sequences.d_acs_ladder(
                family.member(m), splice.sequence, config.n_grid, config.tail_window
            ).tail_estimate
            bound = 4.0 * 2.0 ** (-m)
            passed = passed and tail <= bound
            rows.append((m, threshold, tail, bound))
            results["table"] = _table(["m", "threshold", "d_acs_tail", "bound"], rows)
        return passed

    def _build_family(self, spec: Dict[str, Any], seed: int) -> AcsFamily:
        if SpecKeys.TRUNCATION in spec:
            pair = self.build_pair(spec[SpecKeys.TRUNCATION], seed)
            if pair.provenance.op != "toeplitz":
                raise ConfigError("A truncation family needs a Toeplitz pair spec")
            return self._glt.fourier_truncation_family(pair.provenance.params["coefficients"], pair.label)
        if SpecKeys.APPROXIMANT in spec:
            symbol = self._parse(spec[SpecKeys.APPROXIMANT]).to_symbol()
            return self._approximant_family(symbol, {})
        raise ConfigError(f"A family spec needs '{SpecKeys.TRUNCATION}' or '{SpecKeys.APPROXIMANT}'")

    def _approximant_family(self, symbol: SymbolFunction, pairs: Dict[int, GltPair]) -> AcsFamily:
        # Members are requested from the ladder worker threads.
        lock = threading.Lock()

        def member(m: int) -> GltPair:
            with lock:
                if m not in pairs:
                    pairs[m] = self._glt.dense_symbol_approximant(symbol, m)
                return pairs[m]

        return AcsFamily(lambda m, n: member(m).sequence(n), f"approx({symbol.label})")

    def _run_density(self, config: ExperimentConfig, results: Dict[str, Any]) -> Optional[bool]:
        symbol = self._parse(config.symbol or "").to_symbol()
        n_x, n_theta = config.symbol_grid
        pairs: Dict[int, GltPair] = {
            m: self._glt.dense_symbol_approximant(symbol, m) for m in config.m_grid
        }

        ladder = self._symbols.converge_in_measure_check(
            [pairs[m].symbol for m in config.m_grid], symbol, n_x, n_theta, config.m_grid
        )
        results["convergence"] = ladder.to_dict()
        results["table"] = _table(["m", "d_m_hat"], zip(ladder.index_grid, ladder.values))

        family = self._approximant_family(symbol, pairs)
        cauchy = self._sequences.is_cauchy(family, config.m_grid, config.n_grid, config.tail_window)
        results["cauchy"] = cauchy.to_dict()
        splice = self._sequences.splice_limit(family, config.m_grid, config.n_grid)
        results["splice"] = splice.to_dict()

        limit = GltPair(
            splice.sequence,
            symbol,
            Provenance("splice", tuple(pairs[m].provenance for m in config.m_grid)),
        )
        distribution = self._verify.check_sigma_distribution(
            limit,
            config.n_grid,
            n_x,
            n_theta,
            config.tolerance(ToleranceKeys.KS),
            config.tolerance(ToleranceKeys.FUNCTIONAL),
            config.tail_window,
        )
        results["distribution"] = distribution.to_dict()

        converged = bool(ladder.verdict) and ladder.values[-1] <= config.tolerance(ToleranceKeys.DENSITY)
        return converged and cauchy.verdict and distribution.verdict

    def _run_isometry(self, config: ExperimentConfig, results: Dict[str, Any]) -> Optional[bool]:
        specs = config.pairs or [{SpecKeys.CATALOG: name} for name in ISOMETRY_CATALOG]
        pairs = [self.build_pair(spec, config.seed + j) for j, spec in enumerate(specs)]
        if len(pairs) < 2:
            raise ConfigError("The isometry experiment needs at least two pairs")
        n_x, n_theta = config.symbol_grid

        rows: List[Tuple[Any, ...]] = []
        reports = []
        for s in range(len(pairs)):
            for t in range(s + 1, len(pairs)):
                report = self._verify.check_isometry(
                    pairs[s],
                    pairs[t],
                    config.n_grid,
                    n_x,
                    n_theta,
                    config.tolerance(ToleranceKeys.ISOMETRY),
                    config.tail_window,
                )
                reports.append(report.to_dict())
                rows.append((report.first, report.second, report.d_acs, report.d_m, report.gap))
                results["isometry"] = reports
                results["table"] = _table(["first", "second", "d_acs_hat", "d_m_hat", "gap"], rows)
        return all(r["verdict"] for r in reports)


def _table(header: List[str], rows) -> Dict[str, Any]:
    return {"header": header, "rows": [list(_plain(v) for v in row) for row in rows]}


def _plain(value: Any) -> Any:
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def _complex(value: Any) -> complex:
    """A number, or a [re, im] pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"A complex value needs [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)):
        return complex(value)
    raise ConfigError(f"Not a number: {value!r}")


def _refinements(symbol_grid: Tuple[int, int]) -> List[Tuple[int, int]]:
    """Coarser grids (quarter, half) followed by the configured grid."""
    n_x, n_theta = symbol_grid
    grids = []
    for factor in (4, 2, 1):
        if n_x % factor == 0 and n_theta % factor == 0:
            grids.append((n_x // factor, n_theta // factor))
    return grids
