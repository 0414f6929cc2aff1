"""Root logger set-up for CLI runs."""

from __future__ import annotations

import logging
import os
import sys

from cli.utils.metadata import Metadata

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO}


def level_for(verbosity: int) -> int:
    """``-v`` means INFO, ``-vv`` DEBUG; without flags ``<PREFIX>LOG_LEVEL`` may set the level."""
    if verbosity <= 0:
        configured = os.environ.get(Metadata.env_var("LOG_LEVEL"), "").strip().upper()
        level = logging.getLevelName(configured) if configured else logging.WARNING
        return level if isinstance(level, int) else logging.WARNING
    return VERBOSITY_LEVELS.get(verbosity, logging.DEBUG)


def configure_logging(verbosity: int = 0) -> int:
    """Send log records to stderr so that reports on stdout stay machine-readable."""
    level = level_for(verbosity)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)
    return level
