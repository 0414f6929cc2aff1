"""CSV and JSON renderings of a :class:`SweepReport`."""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, TextIO

import pandas as pd

from wkbpole.errors import ReportIoError
from wkbpole.harness.runner import SweepReport

SCHEMA_VERSION = "1"
CSV_COLUMNS = ("suite", "h", "metric", "value", "threshold", "passed", "mean", "worst_re", "worst_im", "runtime")


def _finite(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return value


def _point(z: complex | None) -> list[float] | None:
    return None if z is None else [z.real, z.imag]


def report_frame(report: SweepReport) -> pd.DataFrame:
    """One row per (suite, h, metric), then one ``<metric>:decreasing`` row per sweep check.

    A failed suite contributes a single ``error`` row for its step. Sweep rows
    leave ``h`` empty and carry the value at the finest step.
    """
    nan = math.nan
    rows = []
    for result in report.results:
        if result.error is not None:
            rows.append((result.suite, result.h, "error", nan, nan, False, nan, nan, nan, result.runtime))
            continue
        for metric in result.metrics:
            threshold = nan if metric.threshold is None else metric.threshold
            mean = nan if metric.mean is None else metric.mean
            worst = complex(nan, nan) if metric.worst_point is None else metric.worst_point
            rows.append(
                (
                    result.suite,
                    result.h,
                    metric.name,
                    metric.value,
                    threshold,
                    metric.passed,
                    mean,
                    worst.real,
                    worst.imag,
                    result.runtime,
                )
            )
    for check in report.checks:
        last = check.values[-1] if check.values else nan
        rows.append((check.suite, nan, f"{check.metric}:decreasing", last, nan, check.passed, nan, nan, nan, nan))
    return pd.DataFrame(rows, columns=list(CSV_COLUMNS))


def report_document(report: SweepReport) -> dict[str, Any]:
    results = []
    timing: dict[str, float] = {}
    for result in report.results:
        timing[f"{result.suite}@{result.h:g}"] = round(result.runtime, 3)
        results.append(
            {
                "suite": result.suite,
                "h": result.h,
                "passed": result.passed,
                "error": result.error,
                "metrics": {
                    metric.name: {
                        "kind": metric.kind.value,
                        "value": _finite(metric.value),
                        "mean": _finite(metric.mean),
                        "threshold": metric.threshold,
                        "passed": metric.passed,
                        "worst_point": _point(metric.worst_point),
                    }
                    for metric in result.metrics
                },
            }
        )
    checks = [
        {"suite": c.suite, "metric": c.metric, "values": [_finite(v) for v in c.values], "passed": c.passed}
        for c in report.checks
    ]
    return {
        "schema_version": SCHEMA_VERSION,
        "config": report.config,
        "results": results,
        "checks": checks,
        "passed": report.passed,
        "timing": {"started": report.started, "total": round(report.runtime, 3), "tasks": timing},
    }


def render(report: SweepReport, fmt: str) -> str:
    if fmt == "csv":
        return report_frame(report).to_csv(index=False, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    if fmt == "json":
        return json.dumps(report_document(report), indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit(report: SweepReport, fmt: str, destination: Path | TextIO | None = None) -> int:
    """Write the report and return the process exit code (0 iff everything passed)."""
    text = render(report, fmt)
    try:
        if destination is None:
            sys.stdout.write(text)
        elif isinstance(destination, Path):
            destination.parent.mkdir(parents=True, exist_ok=True)
            destination.write_text(text, encoding="utf-8")
        else:
            destination.write(text)
    except OSError as exc:
        raise ReportIoError(f"cannot write report to {destination}: {exc}") from exc
    return 0 if report.passed else 1
