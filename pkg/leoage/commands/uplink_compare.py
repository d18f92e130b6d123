"""
Uplink Compare Command - ALOHA Survivors vs. Thinned Poisson

For each offered load, simulates a pure-ALOHA channel and compares the
interdeparture CDF of the surviving transmissions with the exponential
CDF of a Poisson process thinned by the collision probability.
"""

import sys
from typing import Optional

import click

from leoage.lib.experiment import GRID_POINTS, UPLINK_COLUMNS, uplink_compare_rows
from leoage.lib.utils import (
    EXIT_INVALID,
    default_seed,
    make_run_id,
    setup_logger,
    write_rows,
)


def parse_grid(value: str):
    """Parse '0.01,0.05,0.1' into floats."""
    try:
        grid = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"not a comma-separated list of numbers: {value}")
    if not grid:
        raise click.BadParameter("empty lambda grid")
    return grid


@click.command(name="uplink-compare")
@click.option(
    "--lambda-grid",
    default="0.01,0.02,0.05,0.1,0.2,0.3",
    show_default=True,
    help="Comma-separated offered loads",
)
@click.option("--packet-duration", type=float, default=1.0, show_default=True)
@click.option("--horizon", type=float, default=1e6, show_default=True)
@click.option("--seed", type=int, default=None, help="Master seed (default: LEOAGE_SEED, 0)")
@click.option(
    "--out",
    type=click.Path(dir_okay=False),
    default=None,
    help="CSV output path (default: stdout)",
)
@click.option("--grid-points", type=int, default=GRID_POINTS, show_default=True)
def uplink_compare(
    lambda_grid: str,
    packet_duration: float,
    horizon: float,
    seed: Optional[int],
    out: Optional[str],
    grid_points: int,
):
    """Interdeparture CDF of ALOHA survivors against the thinned-Poisson model."""
    run_id = make_run_id()
    logger = setup_logger(run_id, "uplink-compare")
    grid = parse_grid(lambda_grid)

    try:
        master = seed if seed is not None else default_seed()
        rows = uplink_compare_rows(
            grid, packet_duration, horizon, master, grid_points=grid_points, logger=logger
        )
    except ValueError as e:
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(EXIT_INVALID)

    count = write_rows(rows, UPLINK_COLUMNS, out)
    logger.info(f"✅ Wrote {count} rows{f' to {out}' if out else ''} (run {run_id})")
