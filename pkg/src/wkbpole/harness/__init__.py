"""Sweep harness: configuration, verification suites, runner and report emission."""

from wkbpole.harness.config import SweepConfig, load_config, parse_config
from wkbpole.harness.emit import emit
from wkbpole.harness.runner import SweepReport, run
from wkbpole.harness.suites import SUITES

__all__ = ["SUITES", "SweepConfig", "SweepReport", "emit", "load_config", "parse_config", "run"]
