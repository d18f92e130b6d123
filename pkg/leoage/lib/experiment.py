"""
Experiment Orchestration Module

Expands scenarios into sweep points, runs closed-form evaluations and
simulation replications, and renders the rows written by the CLI.

Rows are plain dicts keyed by the column dictionaries below; all
aggregation happens after the replication pool joins, and rows are
emitted in sweep order.
"""

import csv
import logging
import math
import sys
from typing import IO, Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import expon, kstest

from leoage.lib import analysis
from leoage.lib.desim import aloha_arrivals, replication_seeds, run_replications
from leoage.lib.models import (
    AlohaUplink,
    UnstableNetworkError,
    UnsupportedConfigError,
)
from leoage.lib.network import derived_rates, stability_check
from leoage.lib.scenario import ResolvedPoint, Scenario, resolve, scenario_hash
from leoage.lib.stats import (
    dkw_epsilon,
    empirical_cdf,
    paoi_samples,
    summarize,
    trim_trace,
)
from leoage.lib.topology import node_loads

COLUMNS = [
    "scenario_hash",
    "seed",
    "topology",
    "K",
    "N",
    "rho",
    "lambda",
    "policy",
    "source_id",
    "replication",
    "mean_aoi",
    "se_aoi",
    "mean_paoi",
    "paoi_p99",
    "mean_delay",
    "jfi",
    "aoi_lower",
    "aoi_upper",
    "aoi_approx",
    "losses",
    "status",
]

TAIL_COLUMNS = [
    "scenario_hash",
    "seed",
    "rho",
    "policy",
    "source_id",
    "tau",
    "empirical_cdf",
    "bound_cdf",
    "dkw",
]

UPLINK_COLUMNS = [
    "seed",
    "lambda_a",
    "packet_duration",
    "p_c",
    "tau",
    "empirical_cdf",
    "exponential_cdf",
    "ks_distance",
    "survivor_rate",
    "expected_rate",
    "n_survivors",
]

GRID_POINTS = 200
TAIL_CONFIDENCE = 0.99
TAIL_QUANTILE = 0.999


def _base_row(point: ResolvedPoint, digest: str, seed: Optional[int]) -> Dict[str, Any]:
    return {
        "scenario_hash": digest,
        "seed": seed,
        "topology": point.topology,
        "K": point.k_links,
        "N": point.n_sources,
        "rho": point.rho,
    }


def _analytic_columns(
    point: ResolvedPoint,
    source_id: int,
    policy: str,
    logger: Optional[logging.Logger] = None,
) -> Dict[str, Any]:
    config = point.configs[source_id]
    derived = derived_rates(config)
    unstable = stability_check(derived)
    row: Dict[str, Any] = {"lambda": config.lam, "source_id": source_id, "policy": policy}
    if unstable:
        row["status"] = f"unstable at nodes {unstable}"
        return row

    bounds = analysis.aoi_bounds(config, policy, logger=logger)
    row.update(
        {
            "aoi_lower": bounds.lower,
            "aoi_upper": bounds.upper,
            "aoi_approx": bounds.approx,
            "mean_delay": analysis.mean_network_time(derived),
            "status": "ok",
        }
    )
    return row


def analyze_rows(
    scenario: Scenario,
    seed: int,
    logger: Optional[logging.Logger] = None,
) -> Tuple[List[Dict[str, Any]], int]:
    """Closed-form rows for every (sweep point, policy, source).

    seed is the resolved master seed, recorded so analyze and simulate rows
    of one run join on it.

    Returns:
        Tuple of (rows, unstable_points) where unstable_points counts the
        sweep points with at least one overloaded node
    """
    digest = scenario_hash(scenario)
    rows = []
    unstable_points = 0

    for index, spec in enumerate(scenario.points()):
        point = resolve(spec)
        point_unstable = False
        for policy in spec.run.policies:
            for source_id in sorted(point.configs):
                row = _base_row(point, digest, seed)
                row.update(_analytic_columns(point, source_id, policy, logger=logger))
                point_unstable |= row["status"] != "ok"
                rows.append(row)
        if point_unstable:
            unstable_points += 1
            if logger:
                logger.warning(f"Sweep point {index} (rho={point.rho}) is unstable")

    return rows, unstable_points


def simulation_tasks(
    scenario: Scenario,
    seed: int,
) -> List[tuple]:
    """Enumerate (point_index, point, policy, replication, task) in output order."""
    tasks = []
    for index, spec in enumerate(scenario.points()):
        point = resolve(spec)
        for policy_idx, policy in enumerate(spec.run.policies):
            streams = replication_seeds(seed, spec.run.replications, index, policy_idx)
            for rep, stream in enumerate(streams):
                task = {
                    "network": point.network,
                    "policy": policy,
                    "n_pkt": spec.run.n_pkt,
                    "seed": stream,
                    "warmup_frac": spec.run.warmup_frac,
                    "allow_unstable": True,
                }
                tasks.append((index, point, policy, rep, task))
    return tasks


def simulate_rows(
    scenario: Scenario,
    seed: int,
    jobs: int = 1,
    logger: Optional[logging.Logger] = None,
) -> List[Dict[str, Any]]:
    """Simulated statistics next to the closed forms, one row per (point, policy, replication, source)."""
    digest = scenario_hash(scenario)
    planned = simulation_tasks(scenario, seed)
    if logger:
        logger.info(f"Running {len(planned)} replications with {jobs} job(s)")

    results = run_replications([task for *_, task in planned], jobs=jobs)

    rows = []
    for (index, point, policy, rep, _), result in zip(planned, results):
        summary = summarize(result)
        if logger:
            logger.debug(f"Point {index} {policy} rep {rep}: JFI={summary.jfi:.4f}")
        for source_id in sorted(summary.sources):
            stats = summary.sources[source_id]
            row = _base_row(point, digest, seed)
            row.update(_analytic_columns(point, source_id, policy, logger=logger))
            row.update(
                {
                    "replication": rep,
                    "mean_aoi": stats.mean_aoi,
                    "se_aoi": stats.se_aoi,
                    "mean_paoi": stats.mean_paoi,
                    "paoi_p99": stats.paoi_p99,
                    "mean_delay": stats.mean_delay,
                    "jfi": summary.jfi,
                    "losses": stats.losses,
                }
            )
            if result.unstable:
                row["status"] = f"unstable at nodes {result.unstable_nodes}"
            rows.append(row)
    return rows


def tail_rows(
    scenario: Scenario,
    seed: int,
    grid_points: int = GRID_POINTS,
    jobs: int = 1,
    logger: Optional[logging.Logger] = None,
) -> List[Dict[str, Any]]:
    """Empirical PAoI CDF against the hypoexponential bound on a tau grid.

    Raises:
        UnsupportedConfigError: If any link of any point has erasures
        UnstableNetworkError: If any point is overloaded
    """
    digest = scenario_hash(scenario)
    planned = simulation_tasks(scenario, seed)
    for _, point, *_ in planned:
        for config in point.configs.values():
            if not config.error_free:
                raise UnsupportedConfigError("tail comparison requires error-free links (eps = 0)")
        overloaded = [n + 1 for n, rho in enumerate(node_loads(point.network)) if rho >= 1.0]
        if overloaded:
            raise UnstableNetworkError(overloaded)

    results = run_replications([task for *_, task in planned], jobs=jobs)

    rows = []
    for (_, point, policy, _, _), result in zip(planned, results):
        for source_id in sorted(result.deliveries):
            kept, _ = trim_trace(
                result.deliveries[source_id], result.flows[source_id].generated, result.warmup_frac
            )
            peaks = paoi_samples(kept)
            tau = np.linspace(0.0, float(np.quantile(peaks, TAIL_QUANTILE)), grid_points)
            empirical = empirical_cdf(peaks, tau)[:, 1]
            bound = 1.0 - np.asarray(analysis.paoi_tail_bound(point.configs[source_id], tau))
            band = dkw_epsilon(len(peaks), TAIL_CONFIDENCE)
            if logger:
                gap = float(np.max(empirical - bound))
                logger.debug(f"rho={point.rho} source {source_id}: sup gap {gap:.4f}")
            for t, e, b in zip(tau, empirical, bound):
                rows.append(
                    {
                        "scenario_hash": digest,
                        "seed": seed,
                        "rho": point.rho,
                        "policy": policy,
                        "source_id": source_id,
                        "tau": t,
                        "empirical_cdf": e,
                        "bound_cdf": b,
                        "dkw": band,
                    }
                )
    return rows


def uplink_compare_rows(
    lambda_grid: Sequence[float],
    packet_duration: float,
    horizon: float,
    seed: int,
    grid_points: int = GRID_POINTS,
    logger: Optional[logging.Logger] = None,
) -> List[Dict[str, Any]]:
    """Interdeparture CDF of pure-ALOHA survivors against the thinned-Poisson exponential."""
    if packet_duration <= 0 or horizon <= 0 or any(lam <= 0 for lam in lambda_grid):
        raise ValueError("lambda values, packet duration and horizon must be positive")

    rows = []
    for index, lam in enumerate(lambda_grid):
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        survivors = aloha_arrivals(lam, packet_duration, horizon, rng)
        p_c = AlohaUplink(packet_duration=packet_duration).collision_probability(lam)
        expected = lam * (1.0 - p_c)
        gaps = np.diff(survivors)
        if len(gaps) < 2:
            if logger:
                logger.warning(f"lambda_a={lam}: fewer than 3 survivors, skipped")
            continue

        reference = expon(scale=1.0 / expected)
        ks = kstest(gaps, reference.cdf).statistic
        tau = np.linspace(0.0, float(np.quantile(gaps, TAIL_QUANTILE)), grid_points)
        empirical = empirical_cdf(gaps, tau)[:, 1]
        if logger:
            logger.info(f"lambda_a={lam:g}: {len(survivors)} survivors, KS={ks:.4f}")

        for t, e, x in zip(tau, empirical, reference.cdf(tau)):
            rows.append(
                {
                    "seed": seed,
                    "lambda_a": lam,
                    "packet_duration": packet_duration,
                    "p_c": p_c,
                    "tau": t,
                    "empirical_cdf": e,
                    "exponential_cdf": x,
                    "ks_distance": ks,
                    "survivor_rate": len(survivors) / horizon,
                    "expected_rate": expected,
                    "n_survivors": len(survivors),
                }
            )
    return rows


def format_value(value: Any) -> str:
    """CSV cell text: fixed float precision, blanks for missing or non-finite values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".10g") if math.isfinite(value) else ""
    return str(value)


def write_csv(rows: Iterable[Dict[str, Any]], columns: List[str], out: Optional[IO[str]] = None) -> int:
    """Write rows with a header (always emitted); returns the number of data rows."""
    stream = out if out is not None else sys.stdout
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    count = 0
    for row in rows:
        writer.writerow([format_value(row.get(column)) for column in columns])
        count += 1
    return count
