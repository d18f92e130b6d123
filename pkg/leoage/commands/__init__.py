"""Commands for the leoage CLI tool."""

from leoage.commands.analyze import analyze
from leoage.commands.check import check
from leoage.commands.simulate import simulate
from leoage.commands.tail import tail
from leoage.commands.uplink_compare import uplink_compare

__all__ = ["analyze", "check", "simulate", "tail", "uplink_compare"]
