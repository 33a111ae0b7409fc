"""
Configuration Service
=====================

This module provides a service for loading experiment configurations, filling
in per-experiment defaults, hashing the canonical form of a configuration and
keeping the cache of finished run reports.
"""

import hashlib
import json
import logging
import os
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from ..models.errors import ConfigError
from ..models.experiment_config import ExperimentConfig
from ..models.experiment_keys import ExperimentKinds, ToleranceKeys
from ..models.reports import RunReport
from .report_service import ReportService
from .sequence_service import DEFAULT_N_GRID
from .verify_service import DISTRIBUTION_N_GRID, ISOMETRY_N_GRID, RHO_PM_N_GRID

logger = logging.getLogger(__name__)

CACHE_DIR_ENV = "GLT_LAB_CACHE_DIR"

# Per-experiment n grids used when a configuration does not name one.
DEFAULT_N_GRIDS = {
    ExperimentKinds.RHO: DEFAULT_N_GRID,
    ExperimentKinds.PM: DEFAULT_N_GRID,
    ExperimentKinds.DACS: DEFAULT_N_GRID,
    ExperimentKinds.DM: DEFAULT_N_GRID,
    ExperimentKinds.CHECK_SYMBOL: DISTRIBUTION_N_GRID,
    ExperimentKinds.CHECK_RHO_PM: RHO_PM_N_GRID,
    ExperimentKinds.SPLICE: (64, 128, 256, 512, 1024),
    ExperimentKinds.DENSITY: DISTRIBUTION_N_GRID,
    ExperimentKinds.ISOMETRY: ISOMETRY_N_GRID,
}


def get_app_version():
    """Get the application version from package metadata."""
    try:
        return version("glt-lab")
    except PackageNotFoundError:
        return "dev"


def canonical_json(data: Dict[str, Any]) -> str:
    """Sorted keys, compact separators: equal configs give equal text."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


class ConfigService:
    """
    Service for experiment configurations and the result cache.

    User-wide defaults are read from `defaults.json` in the settings
    directory; cached reports live in its `cache` subdirectory, one JSON file
    per configuration hash.
    """

    # Configuration schema version - increment when making breaking changes
    CONFIG_VERSION = "1.0"

    def __init__(self, report_service: Optional[ReportService] = None):
        """Initialize the configuration service."""
        self._settings_dir = self._get_settings_directory()
        self._cache_dir = self._get_cache_directory()
        self._defaults_file = self._settings_dir / "defaults.json"
        self._defaults = self._load_defaults()
        self._reports = report_service or ReportService()

    def _get_settings_directory(self) -> Path:
        """Get the appropriate directory for storing user settings."""
        if os.name == "nt":  # Windows
            app_data = os.environ.get("APPDATA", "")
            if app_data:
                settings_dir = Path(app_data) / "GltLab"
            else:
                settings_dir = Path.home() / ".glt_lab"
        else:  # macOS, Linux
            settings_dir = Path.home() / ".glt_lab"

        settings_dir.mkdir(parents=True, exist_ok=True)
        return settings_dir

    def _get_cache_directory(self) -> Path:
        override = os.environ.get(CACHE_DIR_ENV, "")
        cache_dir = Path(override) if override else self._settings_dir / "cache"
        cache_dir.mkdir(parents=True, exist_ok=True)
        return cache_dir

    @property
    def cache_dir(self) -> Path:
        return self._cache_dir

    def _load_defaults(self) -> dict:
        """Load user-wide configuration defaults; unreadable files are ignored."""
        if self._defaults_file.exists():
            try:
                with open(self._defaults_file, "r", encoding="utf-8") as f:
                    data = json.load(f)

                if not isinstance(data, dict):
                    logger.warning(f"Ignoring defaults file {self._defaults_file}: not an object")
                    return {}

                if data.get("config_version") != self.CONFIG_VERSION:
                    logger.warning(f"Ignoring defaults file with version {data.get('config_version')}")
                    return {}
                return {k: v for k, v in data.items() if k != "config_version"}

            except (json.JSONDecodeError, IOError) as e:
                logger.warning(f"Could not load defaults file: {e}")
                return {}
        return {}

    def load(self, path: str, kind: Optional[str] = None) -> ExperimentConfig:
        """
        Loads a configuration file.

        Args:
            path: Path to a JSON configuration.
            kind: Experiment kind from the command line; wins over the file.

        Raises:
            ConfigError: If the file cannot be read or is invalid.
        """
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid JSON: {e}")
        except IOError as e:
            raise ConfigError(f"Could not read config file {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a JSON object")
        return self.build(kind or data.get("kind", ""), data)

    def build(
        self,
        kind: str,
        data: Optional[Dict[str, Any]] = None,
        n_grid: Optional[Sequence[int]] = None,
        tol: Optional[float] = None,
        output_dir: Optional[str] = None,
        use_cache: Optional[bool] = None,
    ) -> ExperimentConfig:
        """
        Builds and validates a configuration from defaults, file data and
        command-line overrides, in that order of precedence.

        Raises:
            ConfigError: If the result is invalid.
        """
        values: Dict[str, Any] = dict(self._defaults)
        values.update(data or {})
        values["kind"] = kind
        if "tolerances" in self._defaults and data and "tolerances" in data:
            values["tolerances"] = {**self._defaults["tolerances"], **data["tolerances"]}

        config = ExperimentConfig.from_dict(values)
        if not config.n_grid:
            config.n_grid = tuple(DEFAULT_N_GRIDS.get(kind, DEFAULT_N_GRID))
        if n_grid is not None:
            config.n_grid = tuple(int(n) for n in n_grid)
        if tol is not None:
            primary = ToleranceKeys.PRIMARY.get(kind)
            if primary is None:
                logger.warning(f"Experiment '{kind}' has no verdict; --tol is ignored")
            else:
                config.tolerances[primary] = float(tol)
        if output_dir is not None:
            config.output_dir = output_dir
        if use_cache is not None:
            config.use_cache = use_cache
        config.tail_window = min(config.tail_window, len(config.n_grid)) or 1

        config.validate()
        return config

    def hash_config(self, config: ExperimentConfig) -> str:
        """SHA-256 of the canonical JSON of the result-relevant fields."""
        return hashlib.sha256(canonical_json(config.result_fields()).encode("utf-8")).hexdigest()

    def load_cached(self, config: ExperimentConfig) -> Optional[RunReport]:
        """
        Returns the cached report for this configuration, flagged as cached, or
        None when there is no usable entry.
        """
        config_hash = self.hash_config(config)
        entry_path = self._cache_dir / f"{config_hash}.json"
        if not entry_path.exists():
            return None
        try:
            with open(entry_path, "r", encoding="utf-8") as f:
                entry = json.load(f)
        except (json.JSONDecodeError, IOError) as e:
            logger.warning(f"Could not load cache entry {entry_path.name}: {e}")
            return None

        if not isinstance(entry, dict):
            logger.warning(f"Ignoring malformed cache entry {entry_path.name}")
            return None
        if entry.get("config_version") != self.CONFIG_VERSION or entry.get("app_version") != get_app_version():
            logger.info(f"Ignoring cache entry {entry_path.name} from another version")
            return None

        try:
            report = RunReport.from_dict(entry.get("report", {}))
        except ValueError as e:
            logger.warning(f"Ignoring cache entry {entry_path.name}: {e}")
            return None
        if report.config_hash != config_hash:
            logger.warning(f"Cache entry {entry_path.name} does not match its hash")
            return None
        report.cached = True
        logger.info(f"Cache hit for {config.kind} ({config_hash[:12]})")
        return report

    def store_cached(self, report: RunReport) -> None:
        """Writes a finished report to the cache; failures are logged only."""
        entry = {
            "config_version": self.CONFIG_VERSION,
            "app_version": get_app_version(),
            "report": report.to_dict(),
        }
        try:
            self._reports.write_json(str(self._cache_dir / f"{report.config_hash}.json"), entry)
        except IOError as e:
            logger.warning(f"Could not save cache entry: {e}")
