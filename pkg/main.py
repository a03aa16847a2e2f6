"""
Entry point for the recidivism toolkit.

This file provides a simple entry point to run the CLI.
For programmatic use, import from src.cli.main instead.
"""

from src.cli.main import run

if __name__ == "__main__":
    run()
