"""
leoage - Age of Information in LEO Relay Networks

Closed-form AoI bounds and Monte Carlo validation for multi-hop satellite
relay networks.
"""

import click

from leoage import __version__
from leoage.commands.analyze import analyze
from leoage.commands.check import check
from leoage.commands.simulate import simulate
from leoage.commands.tail import tail
from leoage.commands.uplink_compare import uplink_compare


@click.group()
@click.version_option(version=__version__, prog_name="leoage")
def main():
    """leoage - Age of Information bounds for LEO relay networks.

    Evaluate and validate AoI in multi-hop satellite networks:

    \b
    - Closed-form AoI bounds and approximation (analyze)
    - Discrete-event simulation of FCFS, OPF and HAF (simulate)
    - Peak-AoI tail bound against simulation (tail)
    - ALOHA uplink approximation (uplink-compare)
    - Scenario validation and stability report (check)

    Run 'leoage COMMAND --help' for more information on a specific command.
    """
    pass


# Register commands
main.add_command(analyze)
main.add_command(simulate)
main.add_command(tail)
main.add_command(uplink_compare)
main.add_command(check)


if __name__ == "__main__":
    main()
