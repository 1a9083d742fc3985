"""
Command-line entry point
Maps every BinoetherError to its exit code
"""

import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from binoether import __version__
from binoether.commands import COMMANDS
from binoether.config import settings
from binoether.errors import BinoetherError

logger = logging.getLogger(__name__)


def configure_logging() -> None:
    level = logging.DEBUG if settings.DEBUG else getattr(logging, settings.LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stdout)],
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binoether",
        description="Verify non-Noether symmetries, bi-Hamiltonian structures and conservation laws",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except BinoetherError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.warning("⚠️ Interrupted")
        return 130
