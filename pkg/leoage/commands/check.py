"""
Check Command for Scenarios

This command validates a scenario without simulating it:
1. Parses and validates the scenario file
2. Resolves every sweep point to a network
3. Checks stability of every node of every tagged path
4. Reports the end-to-end success probability per source
5. Reports the environment defaults (LEOAGE_JOBS, LEOAGE_SEED, LEOAGE_LOG_DIR)
"""

import os
import sys
from datetime import datetime
from typing import Any, Dict, List, Optional

import click
from dotenv import load_dotenv
from pydantic import BaseModel

from leoage.lib.network import derived_rates, stability_check, success_probabilities
from leoage.lib.scenario import Scenario, resolve
from leoage.lib.utils import EXIT_INVALID, EXIT_UNSTABLE, load_scenario_or_exit

load_dotenv()


class CheckResult(BaseModel):
    """Individual check result."""

    success: bool
    error: Optional[str] = None
    warning: Optional[str] = None
    details: Dict[str, Any] = {}


class ScenarioCheckResult(BaseModel):
    """Structure for scenario check results."""

    success: bool
    timestamp: str
    checks: Dict[str, CheckResult]
    warnings: List[str] = []
    errors: List[str] = []
    unstable: bool = False


def check_env_vars() -> CheckResult:
    """Check the optional environment defaults parse."""
    optional_vars = {
        "LEOAGE_JOBS": "(Optional) Parallel replications, defaults to 1",
        "LEOAGE_SEED": "(Optional) Master seed, defaults to 0",
        "LEOAGE_LOG_DIR": "(Optional) Execution log root, defaults to 'runs'",
    }

    invalid = []
    for var in ("LEOAGE_JOBS", "LEOAGE_SEED"):
        value = os.getenv(var)
        if value is not None:
            try:
                int(value)
            except ValueError:
                invalid.append(f"{var}={value!r} is not an integer")

    return CheckResult(
        success=not invalid,
        error="; ".join(invalid) if invalid else None,
        details={
            "set": {var: os.getenv(var) for var in optional_vars if os.getenv(var)},
            "unset": [f"{var} {desc}" for var, desc in optional_vars.items() if not os.getenv(var)],
        },
    )


def check_point(scenario: Scenario) -> CheckResult:
    """Resolve one sweep point and check stability of every tagged path."""
    try:
        point = resolve(scenario)
    except ValueError as e:
        return CheckResult(success=False, error=str(e))

    sources = {}
    unstable_nodes = set()
    for source_id, config in sorted(point.configs.items()):
        derived = derived_rates(config)
        violating = stability_check(derived)
        unstable_nodes.update(violating)
        sources[source_id] = {
            "lambda": config.lam,
            "max_rho": max(derived.rho),
            "end_to_end_success": success_probabilities(config)[-1],
            "unstable_nodes": violating,
        }

    unstable = bool(unstable_nodes)
    return CheckResult(
        success=True,
        warning=f"rho={point.rho}: unstable at nodes {sorted(unstable_nodes)}" if unstable else None,
        details={"rho": point.rho, "topology": point.topology, "sources": sources, "unstable": unstable},
    )


def run_scenario_check(scenario: Scenario) -> ScenarioCheckResult:
    """Run all checks and return results."""
    result = ScenarioCheckResult(success=True, timestamp=datetime.now().isoformat(), checks={})

    env_check = check_env_vars()
    result.checks["environment"] = env_check
    if not env_check.success:
        result.success = False
        result.errors.append(env_check.error)

    for index, spec in enumerate(scenario.points()):
        point_check = check_point(spec)
        result.checks[f"point_{index}"] = point_check
        if not point_check.success:
            result.success = False
            result.errors.append(f"point {index}: {point_check.error}")
        elif point_check.warning:
            result.unstable = True
            result.warnings.append(point_check.warning)

    return result


@click.command()
@click.argument("scenario_path", type=click.Path(dir_okay=False))
def check(scenario_path: str):
    """Validate a scenario and report per-point stability.

    This command validates:
    - The scenario schema and sweep parameter
    - Resolution of every sweep point to a network
    - Stability (rho < 1) at every node
    - Environment defaults (LEOAGE_JOBS, LEOAGE_SEED)

    Exits 0 when everything is valid and stable, 2 on invalid input and
    3 when some sweep point is unstable.
    """
    click.echo(f"🔍 Checking scenario {scenario_path}...\n")

    scenario = load_scenario_or_exit(scenario_path)
    result = run_scenario_check(scenario)

    if not result.success:
        status_emoji, status_text = "❌", "INVALID"
    elif result.unstable:
        status_emoji, status_text = "⚠️", "UNSTABLE"
    else:
        status_emoji, status_text = "✅", "VALID"
    click.echo(f"{status_emoji} Overall Status: {status_text}")
    click.echo(f"📅 Timestamp: {result.timestamp}\n")

    click.echo("📋 Check Results:")
    for name, check_result in result.checks.items():
        emoji = "✅" if check_result.success and not check_result.warning else "⚠️"
        if not check_result.success:
            emoji = "❌"
        click.echo(f"  {emoji} {name}")
        for source_id, info in check_result.details.get("sources", {}).items():
            click.echo(
                f"      source {source_id}: lambda={info['lambda']:.4g} "
                f"max rho={info['max_rho']:.3f} p_s(K)={info['end_to_end_success']:.4f}"
            )

    if result.warnings:
        click.echo("\n⚠️  Warnings:")
        for warning in result.warnings:
            click.echo(f"  - {warning}")

    if result.errors:
        click.echo("\n❌ Errors:")
        for error in result.errors:
            click.echo(f"  - {error}")

    if not result.success:
        sys.exit(EXIT_INVALID)
    if result.unstable:
        sys.exit(EXIT_UNSTABLE)
