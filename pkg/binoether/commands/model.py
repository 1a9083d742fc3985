"""
Per-model shortcuts: `binoether toda|nse|kdv|mkdv ...`
Builds an ExperimentConfig from flags and validates it like a config file
"""

import argparse
import logging
from typing import Dict

from binoether.commands.run import execute
from binoether.services.experiment_service import DEFAULT_CONFIGS
from binoether.validator import config_values, validate_values

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    for name in DEFAULT_CONFIGS:
        defaults = DEFAULT_CONFIGS[name]
        parser = subparsers.add_parser(name, help=f"Run the {name} experiment")
        if name == "toda":
            parser.add_argument("--n", type=int, default=defaults["n"], help="Particle count")
        else:
            parser.add_argument("--grid-n", type=int, default=defaults.get("grid_n"), help="Grid samples (power of two)")
            parser.add_argument("--length", type=float, default=defaults.get("length"), help="Periodic box length")
            parser.add_argument("--snapshot", default=None, help="Snapshot file for --preset snapshot")
        parser.add_argument("--dt", type=float, default=defaults["dt"])
        parser.add_argument("--t-end", type=float, default=defaults["T"])
        parser.add_argument("--preset", default=defaults["initial"]["preset"])
        parser.add_argument("--method", default=None)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", default=None)
        parser.add_argument("--format", choices=("json", "csv"), default="json")
        parser.add_argument("--tighten", type=float, default=1.0)
        parser.set_defaults(handler=handle, model=name)


def values_from_args(args: argparse.Namespace) -> Dict[str, str]:
    values = {
        "model": args.model,
        "dt": repr(args.dt),
        "T": repr(args.t_end),
        "initial.preset": args.preset,
        "seed": str(args.seed),
        "format": args.format,
    }
    optional = {
        "n": getattr(args, "n", None),
        "grid_n": getattr(args, "grid_n", None),
        "length": getattr(args, "length", None),
        "initial.path": getattr(args, "snapshot", None),
        "method": args.method,
        "output": args.out,
    }
    values.update({k: str(v) for k, v in optional.items() if v is not None})
    defaults = DEFAULT_CONFIGS[args.model]["initial"]
    if args.preset == defaults["preset"]:
        values.update({f"initial.{k}": repr(float(v)) for k, v in defaults.get("params", {}).items()})
    return values


def handle(args: argparse.Namespace) -> int:
    config = validate_values(values_from_args(args), source=f"{args.model} flags")
    logger.debug(f"Config: {config_values(config)}")
    return execute(config, args.tighten, stem=args.model).exit_code
