"""Shared library code for leoage commands."""

from leoage.lib import analysis, desim, models, network, phasetype, stats

__all__ = ["analysis", "desim", "models", "network", "phasetype", "stats"]
