"""leoage - Age of Information bounds and simulation for LEO relay networks."""

__version__ = "0.1.0"
