"""`binoether run --config <path>`"""

import argparse
import logging

from binoether.config import settings
from binoether.models import ExperimentConfig, Report
from binoether.services.experiment_service import run_experiment
from binoether.services.report_service import emit, format_table
from binoether.validator import load_config

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Run one experiment from a key=value config file")
    parser.add_argument("--config", required=True, help="Flat key=value experiment config")
    parser.add_argument("--tighten", type=float, default=1.0, help="Tighten all tolerances by this factor")
    parser.set_defaults(handler=handle)


def execute(config: ExperimentConfig, tighten: float = 1.0, stem: str = "report") -> Report:
    """Run, print the check table and write the report where the config asks"""
    report = run_experiment(config, tighten)
    print(format_table(report))
    emit(report, config.output or settings.OUTPUT_DIR, config.format, stem=stem)
    return report


def handle(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    return execute(config, args.tighten).exit_code
