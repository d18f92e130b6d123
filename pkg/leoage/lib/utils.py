"""Utility functions for leoage commands."""

import logging
import os
import sys
import uuid
from typing import Optional

import click
from dotenv import load_dotenv

from leoage.lib.experiment import write_csv
from leoage.lib.scenario import Scenario, load_scenario

load_dotenv()

DEFAULT_LOG_DIR = "runs"


def make_run_id() -> str:
    """Generate a short 8-character UUID identifying one command invocation."""
    return str(uuid.uuid4())[:8]


def default_jobs() -> int:
    """Parallel replications from LEOAGE_JOBS (default 1)."""
    value = os.getenv("LEOAGE_JOBS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise ValueError(f"LEOAGE_JOBS must be an integer, got '{value}'")


def default_seed(scenario_seed: Optional[int] = None) -> int:
    """Master seed: scenario value, else LEOAGE_SEED, else 0."""
    if scenario_seed is not None:
        return scenario_seed
    value = os.getenv("LEOAGE_SEED")
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"LEOAGE_SEED must be an integer, got '{value}'")


def setup_logger(run_id: str, command: str = "simulate") -> logging.Logger:
    """Set up logger that writes to both console and file using run_id.

    Args:
        run_id: The run ID
        command: Name of the command being run (analyze, simulate, etc.)

    Returns:
        Configured logger instance
    """
    # Log directory: <LEOAGE_LOG_DIR>/{run_id}/{command}/
    log_dir = os.path.join(os.getenv("LEOAGE_LOG_DIR", DEFAULT_LOG_DIR), run_id, command)
    os.makedirs(log_dir, exist_ok=True)

    log_file = os.path.join(log_dir, "execution.log")

    logger = logging.getLogger(f"leoage_{run_id}")
    logger.setLevel(logging.DEBUG)

    # Clear any existing handlers to avoid duplicates
    logger.handlers.clear()

    # File handler - captures everything
    file_handler = logging.FileHandler(log_file, mode="a")
    file_handler.setLevel(logging.DEBUG)

    # Console handler on stderr; stdout may carry CSV
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.INFO)

    file_handler.setFormatter(
        logging.Formatter("%(asctime)s - %(levelname)s - %(message)s", datefmt="%Y-%m-%d %H:%M:%S")
    )
    console_handler.setFormatter(logging.Formatter("%(message)s"))

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

    logger.debug(f"Logger initialized - run {run_id}, command {command}")
    logger.debug(f"Log file: {log_file}")

    return logger


EXIT_INVALID = 2
EXIT_UNSTABLE = 3


def load_scenario_or_exit(path: str, logger: Optional[logging.Logger] = None) -> Scenario:
    """Load a scenario, exiting with code 2 on parse or validation errors."""
    try:
        scenario = load_scenario(path)
    except ValueError as e:
        click.echo(f"❌ Invalid scenario {path}: {e}", err=True)
        if logger:
            logger.debug(f"Scenario rejected: {e}")
        sys.exit(EXIT_INVALID)
    if logger:
        logger.debug(f"Loaded scenario {path}")
    return scenario


def write_rows(rows, columns, out: Optional[str]) -> int:
    """Write CSV rows to out, or to stdout when out is None."""
    if out is None:
        return write_csv(rows, columns)
    with open(out, "w", newline="", encoding="utf-8") as f:
        return write_csv(rows, columns, f)
