"""
Analyze Command - Closed-Form AoI Bounds

Evaluates the closed forms for every sweep point of a scenario and writes
one CSV row per (point, policy, source): AoI lower/upper bounds, the
independence approximation and the exact mean delay.
"""

import sys
from typing import Optional

import click

from leoage.lib.experiment import COLUMNS, analyze_rows
from leoage.lib.utils import (
    EXIT_INVALID,
    EXIT_UNSTABLE,
    default_seed,
    load_scenario_or_exit,
    make_run_id,
    setup_logger,
    write_rows,
)


@click.command()
@click.argument("scenario_path", type=click.Path(dir_okay=False))
@click.option(
    "--seed",
    type=int,
    default=None,
    help="Seed recorded in the provenance column (default: scenario, LEOAGE_SEED, 0)",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False),
    default=None,
    help="CSV output path (default: stdout)",
)
@click.option("--jobs", type=int, default=None, help="Accepted for symmetry; closed forms run serially")
def analyze(scenario_path: str, seed: Optional[int], out: Optional[str], jobs: Optional[int]):
    """Compute closed-form AoI bounds for a scenario.

    Unstable sweep points are reported with a diagnostic status and the
    command exits with code 3 after writing every row.

    Examples:

    \b
        # Bounds for a line network sweep
        leoage analyze scenarios/line_k10.toml --out bounds.csv
    """
    run_id = make_run_id()
    logger = setup_logger(run_id, "analyze")
    scenario = load_scenario_or_exit(scenario_path, logger)

    try:
        master = seed if seed is not None else default_seed(scenario.run.seed)
        rows, unstable_points = analyze_rows(scenario, master, logger=logger)
    except ValueError as e:
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(EXIT_INVALID)

    count = write_rows(rows, COLUMNS, out)
    logger.info(f"✅ Wrote {count} rows{f' to {out}' if out else ''} (run {run_id})")

    if unstable_points:
        click.echo(f"⚠️  {unstable_points} sweep point(s) are unstable (rho >= 1)", err=True)
        sys.exit(EXIT_UNSTABLE)
