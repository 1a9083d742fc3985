"""`binoether verify-all`"""

import argparse
import asyncio
import logging

from binoether.config import settings
from binoether.errors import ConfigValidationError
from binoether.orchestrator import verify_all
from binoether.services.experiment_service import DEFAULT_CONFIGS, acceptance_configs
from binoether.services.report_service import emit, format_table

logger = logging.getLogger(__name__)


def parse_models(value: str) -> list:
    models = [m.strip() for m in value.split(",") if m.strip()]
    unknown = [m for m in models if m not in DEFAULT_CONFIGS]
    if unknown or not models:
        raise ConfigValidationError(
            f"Unknown models: {', '.join(unknown) or '(none given)'}; choose from {', '.join(DEFAULT_CONFIGS)}"
        )
    return models


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify-all", help="Run the acceptance suite across models")
    parser.add_argument("--models", default=",".join(DEFAULT_CONFIGS), help="Comma-separated subset of toda,nse,kdv,mkdv")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="Report directory (default: BINOETHER_OUTPUT_DIR)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--tighten", type=float, default=1.0, help="Tighten all tolerances by this factor")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    configs = acceptance_configs(parse_models(args.models), args.seed)
    report = asyncio.run(verify_all(configs, args.tighten))
    print(format_table(report))
    emit(report, args.out or settings.OUTPUT_DIR, args.format, stem="combined")
    return report.exit_code
