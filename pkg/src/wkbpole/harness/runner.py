"""Run the configured suites over the h-sweep and assemble a :class:`SweepReport`."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

from wkbpole.harness.config import SweepConfig
from wkbpole.harness.suites import SUITES, MetricKind, SuiteContext
from wkbpole.potential import SpectralProblem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricResult:
    name: str
    kind: MetricKind
    value: float
    threshold: float | None
    passed: bool
    mean: float | None = None
    worst_point: complex | None = None


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    h: float
    metrics: tuple[MetricResult, ...]
    runtime: float
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(metric.passed for metric in self.metrics)

    def metric(self, name: str) -> MetricResult | None:
        return next((metric for metric in self.metrics if metric.name == name), None)


@dataclass(frozen=True)
class SweepCheck:
    """Strict decrease of a convergent metric along the sweep."""

    suite: str
    metric: str
    values: tuple[float, ...]
    passed: bool


@dataclass
class SweepReport:
    config: dict[str, Any]
    results: list[SuiteResult] = field(default_factory=list)
    checks: list[SweepCheck] = field(default_factory=list)
    started: str = ""
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results) and all(check.passed for check in self.checks)

    def result(self, suite: str, h: float) -> SuiteResult:
        for result in self.results:
            if result.suite == suite and result.h == h:
                return result
        raise KeyError((suite, h))


@dataclass(frozen=True)
class _Task:
    suite: str
    h: float
    finest: bool
    problem: SpectralProblem
    z0: complex
    z1: complex
    samples: tuple[complex, ...]
    thresholds: dict[str, float | None]


def _passes(kind: MetricKind, value: float, threshold: float | None, finest: bool) -> bool:
    if kind is MetricKind.INFO or threshold is None:
        return True
    if kind is MetricKind.CONVERGENT and not finest:
        return math.isfinite(value)
    return value <= threshold


def run_task(task: _Task) -> SuiteResult:
    """Run one suite at one ``h``; any exception becomes an error record."""
    suite = SUITES[task.suite]
    start = time.perf_counter()
    logger.info("suite %s at h=%g: start", task.suite, task.h)
    metrics = []
    try:
        measured = suite.run(SuiteContext(task.problem, task.h, task.z0, task.z1, task.samples))
        for metric in suite.metrics:
            measurement = measured[metric.name]
            value = float(measurement.value)
            threshold = task.thresholds.get(metric.name, metric.threshold)
            metrics.append(
                MetricResult(
                    metric.name,
                    metric.kind,
                    value,
                    threshold,
                    _passes(metric.kind, value, threshold, task.finest),
                    measurement.mean,
                    measurement.worst_point,
                )
            )
    except Exception as exc:  # noqa: BLE001 - failures stay inside the suite
        runtime = time.perf_counter() - start
        logger.warning("suite %s at h=%g failed: %s: %s", task.suite, task.h, type(exc).__name__, exc)
        return SuiteResult(task.suite, task.h, (), runtime, f"{type(exc).__name__}: {exc}")
    runtime = time.perf_counter() - start
    logger.info("suite %s at h=%g: done in %.2fs", task.suite, task.h, runtime)
    return SuiteResult(task.suite, task.h, tuple(metrics), runtime)


def _tasks(config: SweepConfig) -> list[_Task]:
    samples = config.sample_points
    finest = config.h_list[-1]
    return [
        _Task(
            suite,
            h,
            h == finest,
            config.problem,
            config.z0,
            config.z1,
            samples,
            {metric.name: config.threshold(suite, metric.name) for metric in SUITES[suite].metrics},
        )
        for suite in config.suites
        for h in config.h_list
    ]


def _checks(config: SweepConfig, results: dict[tuple[str, float], SuiteResult]) -> list[SweepCheck]:
    checks = []
    if len(config.h_list) < 2:
        return checks
    for suite in config.suites:
        for metric in SUITES[suite].metrics:
            if metric.kind is not MetricKind.CONVERGENT:
                continue
            values = []
            for h in config.h_list:
                found = results[(suite, h)].metric(metric.name)
                values.append(math.nan if found is None else found.value)
            passed = all(b < a for a, b in zip(values, values[1:]))
            checks.append(SweepCheck(suite, metric.name, tuple(values), passed))
    return checks


def run(config: SweepConfig, *, jobs: int = 1) -> SweepReport:
    """Execute every (suite, h) pair and merge the results in configuration order."""
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    clock = time.perf_counter()
    tasks = _tasks(config)
    results: dict[tuple[str, float], SuiteResult] = {}
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_task, task): task for task in tasks}
            for future in as_completed(futures):
                task = futures[future]
                try:
                    results[(task.suite, task.h)] = future.result()
                except Exception as exc:  # noqa: BLE001 - a crashed worker is a suite failure
                    logger.warning("worker for %s at h=%g crashed: %s", task.suite, task.h, exc)
                    results[(task.suite, task.h)] = SuiteResult(task.suite, task.h, (), 0.0, f"{type(exc).__name__}: {exc}")
    else:
        for task in tasks:
            results[(task.suite, task.h)] = run_task(task)

    ordered = [results[(task.suite, task.h)] for task in tasks]
    report = SweepReport(config.summary(), ordered, _checks(config, results), started, time.perf_counter() - clock)
    logger.info("sweep finished in %.1fs: %s", report.runtime, "passed" if report.passed else "failed")
    return report
