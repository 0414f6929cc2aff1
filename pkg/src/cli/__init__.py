"""Command line for the wkbpole sweeps."""

from wkbpole import __version__

__all__ = ["__version__"]
