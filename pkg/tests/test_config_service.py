"""
Unit tests for ConfigService
============================

Tests for experiment configuration loading, defaults and overrides, the
configuration hash and the result cache.
"""

import json
import logging
import os
import shutil
import tempfile
import unittest
from importlib.metadata import PackageNotFoundError
from pathlib import Path
from unittest.mock import MagicMock, patch

from glt_lab.models.errors import ConfigError
from glt_lab.models.experiment_config import ExperimentConfig
from glt_lab.models.experiment_keys import ToleranceKeys
from glt_lab.models.reports import RunReport
from glt_lab.services.config_service import (
    CACHE_DIR_ENV,
    ConfigService,
    canonical_json,
    get_app_version,
)
from glt_lab.services.sequence_service import DEFAULT_N_GRID

SHIFT = {"catalog": "shift"}


class TestConfigService(unittest.TestCase):
    """Test cases for ConfigService functionality."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        # Suppress debug/info logging during tests for cleaner output
        logging.getLogger().setLevel(logging.ERROR)

        self.temp_dir = tempfile.mkdtemp()
        self.defaults_file = Path(self.temp_dir) / "defaults.json"

    def tearDown(self):
        """Clean up after each test method."""
        if Path(self.temp_dir).exists():
            shutil.rmtree(self.temp_dir)

    def _create_config_service(self):
        """Helper to create a ConfigService rooted in the temporary directory."""
        with patch.dict(os.environ, {CACHE_DIR_ENV: ""}):
            with patch.object(
                ConfigService, "_get_settings_directory", return_value=Path(self.temp_dir)
            ):
                return ConfigService()

    def _write_defaults(self, data):
        with open(self.defaults_file, "w", encoding="utf-8") as f:
            json.dump(data, f)

    def _write_config(self, data, name="experiment.json"):
        path = Path(self.temp_dir) / name
        with open(path, "w", encoding="utf-8") as f:
            f.write(data if isinstance(data, str) else json.dumps(data))
        return str(path)

    def test_build_fills_in_defaults(self):
        """A bare spec gets the default grid and tolerances."""
        config = self._create_config_service().build("rho", {"pair": SHIFT})
        self.assertEqual(config.n_grid, DEFAULT_N_GRID)
        self.assertEqual(config.tolerances, ToleranceKeys.DEFAULTS)
        self.assertEqual(config.m_grid, (1, 2, 3, 4, 5, 6))
        self.assertEqual(config.pair, SHIFT)

    def test_build_uses_per_experiment_grids(self):
        service = self._create_config_service()
        self.assertEqual(service.build("isometry").n_grid, (2048,))
        self.assertEqual(service.build("check-rho-pm", {"pair": SHIFT}).n_grid, (256, 512, 1024, 2048))

    def test_user_defaults_are_applied(self):
        """defaults.json with the current version feeds every build."""
        self._write_defaults({"config_version": "1.0", "seed": 7, "tolerances": {"ks": 0.1}})
        service = self._create_config_service()
        config = service.build("check-symbol", {"pair": SHIFT, "tolerances": {"functional": 0.2}})
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.tolerance("ks"), 0.1)
        self.assertEqual(config.tolerance("functional"), 0.2)

    def test_defaults_with_other_version_are_ignored(self):
        self._write_defaults({"config_version": "0.1", "seed": 7})
        config = self._create_config_service().build("rho", {"pair": SHIFT})
        self.assertEqual(config.seed, 0)

    def test_corrupted_defaults_file_is_ignored(self):
        """Invalid JSON in defaults.json falls back to built-in defaults."""
        with open(self.defaults_file, "w") as f:
            f.write("{invalid json")
        config = self._create_config_service().build("rho", {"pair": SHIFT})
        self.assertEqual(config.seed, 0)

    def test_non_object_defaults_file_is_ignored(self):
        self._write_defaults(["not", "an", "object"])
        config = self._create_config_service().build("rho", {"pair": SHIFT})
        self.assertEqual(config.seed, 0)

    def test_command_line_overrides(self):
        """n grid, tolerance, output dir and cache flag override the file."""
        config = self._create_config_service().build(
            "check-rho-pm",
            {"pair": SHIFT, "n_grid": [64, 128]},
            n_grid=[32, 64, 128],
            tol=0.01,
            output_dir="out",
            use_cache=False,
        )
        self.assertEqual(config.n_grid, (32, 64, 128))
        self.assertEqual(config.tolerance("rho_pm"), 0.01)
        self.assertEqual(config.output_dir, "out")
        self.assertFalse(config.use_cache)

    def test_tol_without_verdict_is_ignored(self):
        config = self._create_config_service().build("rho", {"pair": SHIFT}, tol=0.5)
        self.assertEqual(config.tolerances, ToleranceKeys.DEFAULTS)

    def test_tail_window_is_clipped_to_grid(self):
        config = self._create_config_service().build(
            "rho", {"pair": SHIFT, "tail_window": 5}, n_grid=[8, 16]
        )
        self.assertEqual(config.tail_window, 2)

    def test_default_tail_window_is_three_clipped_to_grid(self):
        service = self._create_config_service()
        wide = service.build("rho", {"pair": SHIFT}, n_grid=[8, 16, 32, 64])
        narrow = service.build("rho", {"pair": SHIFT}, n_grid=[8, 16])
        self.assertEqual(ExperimentConfig(kind="rho").tail_window, 3)
        self.assertEqual(wide.tail_window, 3)
        self.assertEqual(narrow.tail_window, 2)

    def test_invalid_configurations_raise(self):
        """Unknown kinds, keys, missing specs and bad grids are config errors."""
        service = self._create_config_service()
        cases = [
            ("fft", {}),
            ("rho", {"pair": SHIFT, "colour": "red"}),
            ("dacs", {"pair": SHIFT}),
            ("rho", {"pair": SHIFT, "n_grid": [64, 32]}),
            ("rho", {"pair": SHIFT, "n_grid": ["a"]}),
            ("rho", {"pair": SHIFT, "tolerances": {"ks": -1}}),
            ("rho", {"pair": SHIFT, "tolerances": {"speed": 1}}),
            ("rho", {"pair": SHIFT, "seed": "abc"}),
            ("rho", {"pair": SHIFT, "tail_window": [3]}),
            ("density", {}),
            ("splice", {}),
        ]
        for kind, data in cases:
            with self.subTest(kind=kind, data=data):
                with self.assertRaises(ConfigError):
                    service.build(kind, data)

    def test_load_config_file(self):
        """The file's kind is used unless the command line names one."""
        path = self._write_config({"kind": "rho", "pair": SHIFT, "n_grid": [8, 16]})
        service = self._create_config_service()
        config = service.load(path)
        self.assertEqual(config.kind, "rho")
        self.assertEqual(config.n_grid, (8, 16))
        self.assertEqual(service.load(path, "check-symbol").kind, "check-symbol")

    def test_load_errors(self):
        service = self._create_config_service()
        with self.assertRaises(ConfigError):
            service.load(self._write_config("{invalid json"))
        with self.assertRaises(ConfigError):
            service.load(self._write_config("[1, 2]"))
        with self.assertRaises(ConfigError):
            service.load(os.path.join(self.temp_dir, "missing.json"))

    def test_hash_ignores_runtime_fields(self):
        """max_workers, output_dir and use_cache do not change the hash."""
        service = self._create_config_service()
        first = service.build("rho", {"pair": SHIFT})
        second = service.build("rho", {"pair": SHIFT, "max_workers": 4}, output_dir="elsewhere", use_cache=False)
        third = service.build("rho", {"pair": SHIFT, "seed": 1})
        self.assertEqual(service.hash_config(first), service.hash_config(second))
        self.assertNotEqual(service.hash_config(first), service.hash_config(third))
        self.assertEqual(len(service.hash_config(first)), 64)

    def test_canonical_json_is_key_order_independent(self):
        self.assertEqual(canonical_json({"b": 1, "a": [1, 2]}), canonical_json({"a": [1, 2], "b": 1}))
        self.assertEqual(canonical_json({"b": 1, "a": 2}), '{"a":2,"b":1}')

    def _report_for(self, service, config):
        return RunReport(
            experiment=config.kind,
            config=config.to_dict(),
            config_hash=service.hash_config(config),
            results={"ladder": {"values": [0.5]}},
            verdict=None,
            wall_time=1.5,
            app_version=get_app_version(),
        )

    def test_cache_round_trip(self):
        """A stored report is served back flagged as cached."""
        service = self._create_config_service()
        config = service.build("rho", {"pair": SHIFT})
        self.assertIsNone(service.load_cached(config))

        service.store_cached(self._report_for(service, config))
        cached = service.load_cached(config)
        self.assertIsNotNone(cached)
        self.assertTrue(cached.cached)
        self.assertEqual(cached.results, {"ladder": {"values": [0.5]}})
        self.assertEqual(cached.wall_time, 1.5)
        self.assertTrue((Path(self.temp_dir) / "cache").is_dir())

    def test_cache_entry_from_other_version_is_ignored(self):
        service = self._create_config_service()
        config = service.build("rho", {"pair": SHIFT})
        service.store_cached(self._report_for(service, config))
        with patch("glt_lab.services.config_service.get_app_version", return_value="0.0.1"):
            self.assertIsNone(service.load_cached(config))

    def test_cache_entry_with_wrong_hash_is_ignored(self):
        service = self._create_config_service()
        config = service.build("rho", {"pair": SHIFT})
        report = self._report_for(service, config)
        entry_path = service.cache_dir / f"{report.config_hash}.json"
        report.config_hash = "0" * 64
        with open(entry_path, "w", encoding="utf-8") as f:
            json.dump(
                {"config_version": "1.0", "app_version": get_app_version(), "report": report.to_dict()}, f
            )
        self.assertIsNone(service.load_cached(config))

    def test_corrupted_cache_entry_is_ignored(self):
        service = self._create_config_service()
        config = service.build("rho", {"pair": SHIFT})
        with open(service.cache_dir / f"{service.hash_config(config)}.json", "w") as f:
            f.write("{invalid json")
        self.assertIsNone(service.load_cached(config))

    def test_cache_write_failure_is_logged_only(self):
        report_service = MagicMock()
        report_service.write_json.side_effect = IOError("disk full")
        with patch.dict(os.environ, {CACHE_DIR_ENV: ""}):
            with patch.object(ConfigService, "_get_settings_directory", return_value=Path(self.temp_dir)):
                service = ConfigService(report_service)
        config = service.build("rho", {"pair": SHIFT})
        service.store_cached(self._report_for(service, config))
        report_service.write_json.assert_called_once()

    def test_cache_directory_override(self):
        """GLT_LAB_CACHE_DIR moves the cache."""
        cache_dir = Path(self.temp_dir) / "elsewhere"
        with patch.dict(os.environ, {CACHE_DIR_ENV: str(cache_dir)}):
            with patch.object(ConfigService, "_get_settings_directory", return_value=Path(self.temp_dir)):
                service = ConfigService()
        self.assertEqual(service.cache_dir, cache_dir)
        self.assertTrue(cache_dir.is_dir())

    def test_app_version_falls_back_to_dev(self):
        with patch(
            "glt_lab.services.config_service.version", side_effect=PackageNotFoundError("glt-lab")
        ):
            self.assertEqual(get_app_version(), "dev")

    def test_config_to_dict_round_trip(self):
        config = self._create_config_service().build("dacs", {"pair": SHIFT, "other": {"catalog": "zero"}})
        self.assertEqual(ExperimentConfig.from_dict(config.to_dict()), config)

    @unittest.skipUnless(os.name == "nt", "Windows-specific test")
    def test_windows_settings_directory(self):
        """Test that Windows settings directory is correctly determined."""
        with patch.dict(
            "glt_lab.services.config_service.os.environ",
            {"APPDATA": "C:\\Users\\Test\\AppData\\Roaming", CACHE_DIR_ENV: ""},
        ):
            with patch("glt_lab.services.config_service.Path") as mock_path_class:
                mock_appdata_path = MagicMock()
                mock_settings_path = MagicMock()
                mock_child = MagicMock()

                mock_path_class.return_value = mock_appdata_path
                mock_appdata_path.__truediv__.return_value = mock_settings_path
                mock_settings_path.__truediv__.return_value = mock_child
                mock_child.exists.return_value = False

                config_service = ConfigService()

                mock_path_class.assert_called_with("C:\\Users\\Test\\AppData\\Roaming")
                mock_appdata_path.__truediv__.assert_called_with("GltLab")
                mock_settings_path.mkdir.assert_called_once_with(parents=True, exist_ok=True)
                self.assertEqual(config_service._settings_dir, mock_settings_path)

    @unittest.skipIf(os.name == "nt", "Unix/Linux/macOS-specific test")
    def test_unix_settings_directory(self):
        """Test that Unix/Linux/macOS settings directory is correctly determined."""
        with patch.dict("glt_lab.services.config_service.os.environ", {CACHE_DIR_ENV: ""}):
            with patch("glt_lab.services.config_service.Path") as mock_path_class:
                mock_home_path = MagicMock()
                mock_settings_path = MagicMock()
                mock_child = MagicMock()

                mock_path_class.home.return_value = mock_home_path
                mock_home_path.__truediv__.return_value = mock_settings_path
                mock_settings_path.__truediv__.return_value = mock_child
                mock_child.exists.return_value = False

                config_service = ConfigService()

                mock_path_class.home.assert_called_once()
                mock_home_path.__truediv__.assert_called_with(".glt_lab")
                mock_settings_path.mkdir.assert_called_once_with(parents=True, exist_ok=True)
                self.assertEqual(config_service._settings_dir, mock_settings_path)
                self.assertEqual(config_service.cache_dir, mock_child)


if __name__ == "__main__":
    unittest.main()
