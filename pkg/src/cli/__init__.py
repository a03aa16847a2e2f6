"""
Command-line interface for the recidivism toolkit.

One subcommand per workflow step: featurize, train, cv, audit, xregion,
psa and synth.
"""

from .main import build_parser, main, run

__all__ = ["build_parser", "main", "run"]
