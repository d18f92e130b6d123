"""
Tail Command - Peak AoI Tail Bound

Compares the empirical Peak-AoI CDF of simulated error-free scenarios with
the hypoexponential tail bound on a tau grid, with the DKW band width.
"""

import sys
from typing import Optional

import click

from leoage.lib.experiment import GRID_POINTS, TAIL_COLUMNS, tail_rows
from leoage.lib.models import UnstableNetworkError
from leoage.lib.utils import (
    EXIT_INVALID,
    EXIT_UNSTABLE,
    default_jobs,
    default_seed,
    load_scenario_or_exit,
    make_run_id,
    setup_logger,
    write_rows,
)


@click.command()
@click.argument("scenario_path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help="Master seed (default: scenario, LEOAGE_SEED, 0)")
@click.option(
    "--out",
    type=click.Path(dir_okay=False),
    default=None,
    help="CSV output path (default: stdout)",
)
@click.option("--jobs", type=int, default=None, help="Parallel replications (default: LEOAGE_JOBS)")
@click.option("--grid-points", type=int, default=GRID_POINTS, show_default=True, help="Points on the tau grid")
def tail(
    scenario_path: str,
    seed: Optional[int],
    out: Optional[str],
    jobs: Optional[int],
    grid_points: int,
):
    """Empirical PAoI CDF against the closed-form tail bound.

    The scenario must be error-free (eps = 0 on every link).
    """
    run_id = make_run_id()
    logger = setup_logger(run_id, "tail")
    scenario = load_scenario_or_exit(scenario_path, logger)

    try:
        master = seed if seed is not None else default_seed(scenario.run.seed)
        workers = jobs if jobs is not None else default_jobs()
        rows = tail_rows(scenario, master, grid_points=grid_points, jobs=workers, logger=logger)
    except UnstableNetworkError as e:
        click.echo(f"❌ {e}", err=True)
        sys.exit(EXIT_UNSTABLE)
    except ValueError as e:
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(EXIT_INVALID)

    count = write_rows(rows, TAIL_COLUMNS, out)
    logger.info(f"✅ Wrote {count} rows{f' to {out}' if out else ''} (run {run_id})")
