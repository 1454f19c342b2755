"""
Command-line interface for distributed AIA planning.

Runs the planners on scenario files, benchmarks them and replays stored plans.
"""

from src.cli.main import cli, main

__all__ = ["cli", "main"]
