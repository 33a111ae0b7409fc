"""
Unit tests for ExperimentController and the command line
========================================================

Tests for pair specs, the experiment handlers, the result cache, partial
output on errors and the exit codes of the command-line entry point.
"""

import json
import logging
import os
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest.mock import MagicMock, patch

import numpy as np

from glt_lab.app import EXIT_ERROR, EXIT_PASS, EXIT_VERDICT_FALSE, main, parse_arguments
from glt_lab.controllers.experiment_controller import ExperimentController
from glt_lab.models.errors import ConfigError, GeneratorError, GltLabError, UnknownIdentifierError
from glt_lab.services.config_service import CACHE_DIR_ENV, ConfigService
from glt_lab.services.ladder_worker import LadderWorker
from glt_lab.services.report_service import ReportService

TRUNCATION_COEFFICIENTS = {str(k): 2.0 ** (-abs(k)) / 2 for k in range(-12, 13) if k != 0}


class ControllerTestCase(unittest.TestCase):
    """Shared fixtures: services rooted in a temporary directory."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        logging.getLogger().setLevel(logging.ERROR)
        self.temp_dir = tempfile.mkdtemp()
        self.out_dir = os.path.join(self.temp_dir, "out")
        self.env_patch = patch.dict(os.environ, {CACHE_DIR_ENV: os.path.join(self.temp_dir, "cache")})
        self.settings_patch = patch.object(
            ConfigService, "_get_settings_directory", return_value=Path(self.temp_dir)
        )
        self.env_patch.start()
        self.settings_patch.start()
        self.report_service = ReportService()
        self.config_service = ConfigService(self.report_service)
        self.controller = ExperimentController(self.config_service, self.report_service)

    def tearDown(self):
        """Clean up after each test method."""
        self.settings_patch.stop()
        self.env_patch.stop()
        if Path(self.temp_dir).exists():
            shutil.rmtree(self.temp_dir)

    def build(self, kind, data=None, **overrides):
        overrides.setdefault("output_dir", self.out_dir)
        return self.config_service.build(kind, data, **overrides)

    def read_csv(self, name):
        with open(os.path.join(self.out_dir, name), "r", encoding="utf-8") as f:
            return f.read()

    def read_report(self):
        with open(os.path.join(self.out_dir, "report.json"), "r", encoding="utf-8") as f:
            return json.load(f)


class TestPairSpecs(ControllerTestCase):
    """Test cases for building pairs from config specs."""

    def test_toeplitz_expression(self):
        """Expressions are expanded into Fourier coefficients."""
        pair = self.controller.build_pair({"toeplitz": "2 - 2*cos(theta)"})
        np.testing.assert_allclose(
            pair.sequence(3), [[2, -1, 0], [-1, 2, -1], [0, -1, 2]], atol=1e-12
        )
        self.assertTrue(pair.provenance.params["coefficients"].real)

    def test_complex_toeplitz_expression(self):
        pair = self.controller.build_pair({"toeplitz": "exp(i*theta)"})
        self.assertFalse(pair.provenance.params["coefficients"].real)
        np.testing.assert_allclose(pair.sequence(3), np.eye(3, k=-1), atol=1e-12)

    def test_coefficient_table(self):
        pair = self.controller.build_pair({"coefficients": {"0": 1, "1": [0, 2]}})
        np.testing.assert_array_equal(pair.sequence(2), [[1, 0], [2j, 1]])

    def test_diag_and_combinations(self):
        spec = {
            "sum": [
                {"product": [{"diag": "x"}, {"catalog": "laplacian"}]},
                {"scale": [0, 1], "of": {"catalog": "identity"}},
            ]
        }
        pair = self.controller.build_pair(spec)
        expected = np.diag([0.5, 1.0]) @ np.array([[2, -1], [-1, 2]]) + 1j * np.eye(2)
        np.testing.assert_allclose(pair.sequence(2), expected, atol=1e-15)
        self.assertEqual(pair.provenance.op, "add")

    def test_zero_spec(self):
        pair = self.controller.build_pair({"zero": "small_norm", "rate": "inv_n", "seed": 4})
        self.assertAlmostEqual(np.linalg.norm(pair.sequence(16), 2), 1 / 16, places=12)

    def test_symbol_override_and_rearrangement(self):
        pair = self.controller.build_pair({"diag": "x", "rearrange": "reflect_x"})
        self.assertAlmostEqual(complex(pair.symbol(0.25, 0.0)), 0.75)
        other = self.controller.build_pair({"catalog": "shift", "symbol": "2"})
        self.assertEqual(complex(other.symbol(0.1, 0.1)), 2.0)

    def test_invalid_specs(self):
        with self.assertRaises(ConfigError):
            self.controller.build_pair({"diag": "x", "catalog": "shift"})
        with self.assertRaises(ConfigError):
            self.controller.build_pair({})
        with self.assertRaises(ConfigError):
            self.controller.build_pair({"catalog": "hilbert"})
        with self.assertRaises(ConfigError):
            self.controller.build_pair({"sum": [{"catalog": "shift"}]})
        with self.assertRaises(ConfigError):
            self.controller.build_pair({"scale": 2})
        with self.assertRaises(ConfigError):
            self.controller.build_pair({"coefficients": {"0": "one"}})
        with self.assertRaises(UnknownIdentifierError):
            self.controller.build_pair({"diag": "theta"})


class TestExperiments(ControllerTestCase):
    """Test cases for the experiment handlers."""

    def test_rho_on_zero_sequence(self):
        """The zero sequence gives an all-zero CSV."""
        config = self.build("rho", {"pair": {"catalog": "zero"}}, n_grid=[8, 16, 32])
        report = self.controller.run(config)
        self.assertIsNone(report.verdict)
        self.assertEqual(self.read_csv("rho.csv"), "n,rho_hat\n8,0\n16,0\n32,0\n")
        saved = self.read_report()
        self.assertEqual(saved["experiment"], "rho")
        self.assertEqual(saved["config_hash"], self.config_service.hash_config(config))
        self.assertEqual(saved["results"]["provenance"]["op"], "diag")

    def test_check_rho_pm_on_shift_expression(self):
        """exp(i*theta): gap about 1/n, verdict true."""
        config = self.build(
            "check-rho-pm",
            {"pair": {"toeplitz": "exp(i*theta)"}, "symbol_grid": [16, 16]},
            n_grid=[64, 128, 256],
        )
        report = self.controller.run(config)
        self.assertTrue(report.verdict)
        self.assertAlmostEqual(report.results["rho_pm"]["gap"], 1 / 256, places=10)
        lines = self.read_csv("check-rho-pm.csv").splitlines()
        self.assertEqual(lines[0], "n,rho_hat,p_m_hat,gap")
        self.assertEqual(len(lines), 4)

    def test_check_rho_pm_with_wrong_symbol_is_false(self):
        config = self.build(
            "check-rho-pm",
            {"pair": {"catalog": "laplacian", "symbol": "0"}, "symbol_grid": [8, 8]},
            n_grid=[64, 128],
        )
        self.assertFalse(self.controller.run(config).verdict)

    def test_pm_refines_the_grid(self):
        config = self.build("pm", {"symbol": "2 - 2*cos(theta)", "symbol_grid": [16, 1024]})
        report = self.controller.run(config)
        rows = report.results["table"]["rows"]
        self.assertEqual([row[:2] for row in rows], [[4, 256], [8, 512], [16, 1024]])
        self.assertAlmostEqual(report.results["p_m"], 0.97461, delta=2e-3)

    def test_dacs_and_dm(self):
        data = {"pair": {"catalog": "shift"}, "other": {"catalog": "zero"}, "symbol_grid": [8, 8]}
        dacs = self.controller.run(self.build("dacs", data, n_grid=[32, 64]))
        self.assertAlmostEqual(dacs.results["ladder"]["tail_estimate"], 63 / 64, places=12)
        self.assertFalse(dacs.results["acs_equivalent"])
        dm = self.controller.run(self.build("dm", data))
        self.assertAlmostEqual(dm.results["d_m"], 1.0, places=12)

    def test_check_symbol_on_shift(self):
        config = self.build(
            "check-symbol", {"pair": {"catalog": "shift"}, "symbol_grid": [8, 8]}, n_grid=[64, 128]
        )
        report = self.controller.run(config)
        self.assertTrue(report.verdict)
        self.assertEqual(self.read_csv("check-symbol.csv").splitlines()[0], "n,ks,max_functional_gap")

    def test_splice_on_truncations(self):
        """Every member is within 4 * 2^-m of the spliced limit."""
        config = self.build(
            "splice",
            {
                "family": {"truncation": {"coefficients": TRUNCATION_COEFFICIENTS, "real": True}},
                "m_grid": [1, 2, 3, 4],
            },
            n_grid=[32, 64],
        )
        report = self.controller.run(config)
        self.assertTrue(report.verdict)
        for m, _, tail, bound in report.results["table"]["rows"]:
            self.assertLessEqual(tail, bound)
            self.assertEqual(bound, 4 * 2.0 ** (-m))

    def test_splice_needs_toeplitz_truncation(self):
        config = self.build("splice", {"family": {"truncation": {"diag": "x"}}, "m_grid": [1, 2, 3]})
        with self.assertRaises(ConfigError):
            self.controller.run(config)

    def test_density_of_x_exp_i_theta(self):
        """Dense approximants of x e^{i theta} converge and splice to a sequence with that symbol."""
        config = self.build(
            "density",
            {"symbol": "x*exp(i*theta)", "m_grid": [1, 2, 3, 4, 5, 6], "symbol_grid": [64, 64]},
            n_grid=[64, 128],
        )
        report = self.controller.run(config)
        self.assertTrue(report.verdict, report.results)
        values = report.results["convergence"]["values"]
        self.assertLess(values[-1], 0.05)

    def test_approximant_members_are_built_once_across_threads(self):
        glt = self.controller._glt
        symbol = self.controller._parse("x*exp(i*theta)").to_symbol()
        with patch.object(glt, "dense_symbol_approximant", wraps=glt.dense_symbol_approximant) as build:
            family = self.controller._approximant_family(symbol, {})
            items = [(m, n) for m in (1, 2, 3) for n in (8, 16, 32, 64)] * 4
            matrices = LadderWorker(max_workers=8).run(lambda item: family(*item), items)
        self.assertEqual(build.call_count, 3)
        np.testing.assert_array_equal(matrices[0], family(1, 8))

    def test_isometry_on_toeplitz_pairs(self):
        config = self.build(
            "isometry",
            {
                "pairs": [{"catalog": "laplacian"}, {"catalog": "shift"}, {"catalog": "identity"}],
                "symbol_grid": [16, 1024],
            },
            n_grid=[512],
        )
        report = self.controller.run(config)
        self.assertEqual(len(report.results["isometry"]), 3)
        self.assertTrue(report.verdict, report.results["isometry"])

    def test_isometry_needs_two_pairs(self):
        with self.assertRaises(ConfigError):
            self.controller.run(self.build("isometry", {"pairs": [{"catalog": "shift"}]}, n_grid=[8]))


class TestRunLifecycle(ControllerTestCase):
    """Test cases for caching and partial output."""

    def test_second_run_is_served_from_cache(self):
        config = self.build("rho", {"pair": {"catalog": "zero"}}, n_grid=[8, 16])
        first = self.controller.run(config)
        self.assertFalse(first.cached)
        os.remove(os.path.join(self.out_dir, "rho.csv"))

        with patch.object(self.controller, "_configure_services") as configure:
            second = self.controller.run(config)
            configure.assert_not_called()
        self.assertTrue(second.cached)
        self.assertEqual(second.results["table"], first.results["table"])
        self.assertEqual(self.read_csv("rho.csv"), "n,rho_hat\n8,0\n16,0\n")

    def test_no_cache_recomputes(self):
        config = self.build("rho", {"pair": {"catalog": "shift"}}, n_grid=[8], use_cache=False)
        self.controller.run(config)
        self.assertFalse(self.controller.run(config).cached)
        self.assertEqual(list(self.config_service.cache_dir.glob("*.json")), [])

    def test_error_writes_partial_report(self):
        """A failing generator still leaves report.json with the error."""
        config = self.build("rho", {"pair": {"diag": "1/(x - 0.5)"}}, n_grid=[2, 4])
        with self.assertRaises(GeneratorError):
            self.controller.run(config)
        saved = self.read_report()
        self.assertIn("not finite", saved["error"])
        self.assertEqual(saved["results"]["provenance"]["op"], "diag")
        self.assertFalse(os.path.exists(os.path.join(self.out_dir, "rho.csv")))
        self.assertEqual(list(self.config_service.cache_dir.glob("*.json")), [])

    def test_wrong_typed_seed_writes_partial_report(self):
        config = self.build(
            "rho", {"pair": {"zero": "low_rank", "rate": "sqrt", "seed": "abc"}}, n_grid=[8, 16]
        )
        with self.assertRaises(ConfigError):
            self.controller.run(config)
        self.assertIn("Malformed pair spec", self.read_report()["error"])

    def test_unexpected_failure_is_reported_as_lab_error(self):
        config = self.build("rho", {"pair": {"catalog": "shift"}}, n_grid=[8], use_cache=False)
        failing = MagicMock(side_effect=RuntimeError("boom"))
        with patch.dict(self.controller._handlers, {"rho": failing}):
            with self.assertRaises(GltLabError) as ctx:
                self.controller.run(config)
        self.assertIsInstance(ctx.exception.__cause__, RuntimeError)
        self.assertEqual(self.read_report()["error"], "RuntimeError: boom")

    def test_replay_with_same_seed_is_byte_identical(self):
        spec = {"sum": [{"catalog": "laplacian"}, {"zero": "low_rank", "rate": "sqrt", "seed": 5}]}
        config = self.build("rho", {"pair": spec}, n_grid=[16, 32, 64], use_cache=False)
        self.controller.run(config)
        first = self.read_csv("rho.csv")
        self.controller.run(config)
        self.assertEqual(self.read_csv("rho.csv"), first)
        self.assertEqual(len(first.splitlines()), 4)

    def test_progress_callback_is_forwarded(self):
        seen = []
        controller = ExperimentController(
            self.config_service, self.report_service, progress_callback=seen.append
        )
        controller.run(self.build("rho", {"pair": {"catalog": "shift"}}, n_grid=[4, 8], use_cache=False))
        self.assertEqual(seen[-1], 100)


class TestCommandLine(ControllerTestCase):
    """Test cases for the glt-lab entry point."""

    def write_config(self, data):
        path = os.path.join(self.temp_dir, "experiment.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        return path

    def test_parse_arguments(self):
        args = parse_arguments(["check-rho-pm", "--n-grid", "64,128", "--tol", "0.01", "--no-cache"])
        self.assertEqual(args.experiment, "check-rho-pm")
        self.assertEqual(args.n_grid, [64, 128])
        self.assertEqual(args.tol, 0.01)
        self.assertTrue(args.no_cache)

    def test_unknown_experiment_is_rejected(self):
        with self.assertRaises(SystemExit):
            parse_arguments(["fft"])

    def test_exit_code_pass(self):
        path = self.write_config({"pair": {"toeplitz": "exp(i*theta)"}, "symbol_grid": [8, 8]})
        code = main(["check-rho-pm", "--config", path, "--n-grid", "64,128", "--out", self.out_dir, "--quiet"])
        self.assertEqual(code, EXIT_PASS)
        self.assertTrue(os.path.exists(os.path.join(self.out_dir, "check-rho-pm.csv")))

    def test_exit_code_for_experiments_without_verdict(self):
        path = self.write_config({"pair": {"catalog": "zero"}})
        self.assertEqual(main(["rho", "--config", path, "--n-grid", "8", "--out", self.out_dir, "--quiet"]), EXIT_PASS)

    def test_exit_code_verdict_false(self):
        path = self.write_config({"pair": {"catalog": "laplacian", "symbol": "0"}, "symbol_grid": [8, 8]})
        code = main(["check-rho-pm", "--config", path, "--n-grid", "32,64", "--out", self.out_dir, "--quiet"])
        self.assertEqual(code, EXIT_VERDICT_FALSE)

    def test_exit_code_error(self):
        path = self.write_config({"pair": {"catalog": "hilbert"}})
        self.assertEqual(main(["rho", "--config", path, "--out", self.out_dir, "--quiet"]), EXIT_ERROR)
        self.assertEqual(main(["rho", "--config", os.path.join(self.temp_dir, "missing.json"), "--quiet"]), EXIT_ERROR)

    def test_wrong_typed_values_exit_with_error_and_report(self):
        for pair in ({"diag": 5}, {"zero": "low_rank", "rate": "sqrt", "seed": "abc"}):
            with self.subTest(pair=pair):
                path = self.write_config({"pair": pair})
                code = main(["rho", "--config", path, "--n-grid", "8", "--out", self.out_dir, "--quiet"])
                self.assertEqual(code, EXIT_ERROR)
                self.assertTrue(self.read_report()["error"])
                os.remove(os.path.join(self.out_dir, "report.json"))

    def test_expression_error_exit_code(self):
        path = self.write_config({"pair": {"toeplitz": "2 -* cos(theta)"}})
        self.assertEqual(main(["rho", "--config", path, "--out", self.out_dir, "--quiet"]), EXIT_ERROR)


if __name__ == "__main__":
    unittest.main()
