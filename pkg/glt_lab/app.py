"""
Application Entry Point
=======================

This module contains the command-line entry point of the GLT laboratory:

    glt-lab <experiment> [--config PATH] [--n-grid N,N,...] [--tol T]
                         [--out DIR] [--no-cache] [--verbose | --quiet]

Exit codes: 0 when the experiment passes (or has no verdict), 1 on errors,
2 when the verdict is false.
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from .controllers.experiment_controller import ExperimentController
from .models.errors import GltLabError
from .models.experiment_keys import ExperimentKinds
from .services.config_service import ConfigService, get_app_version
from .services.report_service import ReportService

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_VERDICT_FALSE = 2


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="glt-lab",
        description="Asymptotic spectral experiments on GLT matrix sequences.",
    )
    parser.add_argument("experiment", choices=ExperimentKinds.ALL, help="Experiment to run")
    parser.add_argument("--config", type=str, help="JSON experiment configuration")
    parser.add_argument("--n-grid", type=_int_list, help="Matrix orders, e.g. 128,256,512")
    parser.add_argument("--tol", type=float, help="Tolerance of the experiment verdict")
    parser.add_argument("--out", type=str, help="Output directory")
    parser.add_argument("--no-cache", action="store_true", help="Ignore and do not update the result cache")
    parser.add_argument("--version", action="version", version=f"%(prog)s {get_app_version()}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="Warnings and errors only")
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parses the command line, runs one experiment and returns the exit code.
    """
    args = parse_arguments(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    report_service = ReportService()
    try:
        config_service = ConfigService(report_service)
        overrides = {
            "n_grid": args.n_grid,
            "tol": args.tol,
            "output_dir": args.out,
            "use_cache": False if args.no_cache else None,
        }
        if args.config:
            base = config_service.load(args.config, args.experiment)
            config = config_service.build(args.experiment, base.to_dict(), **overrides)
        else:
            config = config_service.build(args.experiment, None, **overrides)

        controller = ExperimentController(config_service, report_service)
        report = controller.run(config)
    except (GltLabError, OSError) as e:
        logger.error(f"{args.experiment} failed: {e}")
        return EXIT_ERROR

    if report.verdict is False:
        logger.warning(f"{args.experiment}: verdict is false")
        return EXIT_VERDICT_FALSE
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
