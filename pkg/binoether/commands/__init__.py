"""CLI subcommand handlers"""

from binoether.commands import model, run, verify

COMMANDS = (run, verify, model)

__all__ = ["COMMANDS", "model", "run", "verify"]
