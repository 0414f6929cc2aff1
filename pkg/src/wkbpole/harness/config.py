"""Sweep configuration: YAML in, validated :class:`SweepConfig` out."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from wkbpole.errors import ConfigError, ParseError, ValidationError
from wkbpole.harness.suites import SUITES
from wkbpole.potential import MeromorphicPotential, RegularityReport, SpectralProblem, Strip, parse_complex, verify_regular
from wkbpole.settings import NumericsSettings

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("csv", "json")
TOP_LEVEL_KEYS = frozenset(
    {"potential", "energy", "strip", "h_list", "anchors", "suites", "sample_sets", "output", "thresholds", "numerics"}
)
# grid of the default sample set, as fractions of (d_x, d_y)
DEFAULT_RE_FRACTIONS = (-0.4, -0.26, -0.12, 0.03, 0.17, 0.31, 0.46, 0.6, 0.71, 0.8)
DEFAULT_IM_FRACTIONS = (-0.51, -0.2, 0.09, 0.26, 0.54)
MAX_STEP_FRACTION = 0.1


@dataclass(frozen=True)
class SweepConfig:
    problem: SpectralProblem
    h_list: tuple[float, ...]
    z0: complex
    z1: complex
    suites: tuple[str, ...]
    sample_sets: dict[str, tuple[complex, ...]]
    output_format: str = "csv"
    thresholds: dict[str, dict[str, float]] = field(default_factory=dict)
    regularity: RegularityReport | None = None

    @property
    def sample_points(self) -> tuple[complex, ...]:
        """All sample points, in set order, without duplicates."""
        seen: dict[complex, None] = {}
        for points in self.sample_sets.values():
            for z in points:
                seen.setdefault(z, None)
        return tuple(seen)

    def threshold(self, suite: str, metric: str) -> float | None:
        configured = self.thresholds.get(suite, {})
        if metric in configured:
            return configured[metric]
        return SUITES[suite].metric(metric).threshold

    def summary(self) -> dict[str, Any]:
        strip = self.problem.strip
        return {
            "potential": self.problem.potential.describe(),
            "energy": [self.problem.energy.real, self.problem.energy.imag],
            "strip": {"d_x": strip.d_x, "d_y": strip.d_y},
            "h_list": list(self.h_list),
            "anchors": {"z0": self.z0.real, "z1": self.z1.real},
            "suites": list(self.suites),
            "sample_points": sum(len(points) for points in self.sample_sets.values()),
            "min_abs_im_momentum": None if self.regularity is None else self.regularity.min_abs_im_momentum,
        }


def default_samples(strip: Strip) -> tuple[complex, ...]:
    return tuple(
        complex(round(fx * strip.d_x, 10), round(fy * strip.d_y, 10))
        for fx in DEFAULT_RE_FRACTIONS
        for fy in DEFAULT_IM_FRACTIONS
    )


def _mapping(value: Any, key: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ValidationError(key, f"expected a mapping, got {type(value).__name__}")
    return value


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(key, f"expected a number, got {value!r}")
    return float(value)


def _complex(value: Any, key: str) -> complex:
    try:
        return parse_complex(value)
    except ValueError as exc:
        raise ValidationError(key, str(exc)) from None


def _load_yaml(text: str) -> Mapping[str, Any]:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        message = str(exc.problem or exc)
        if mark is None:
            raise ParseError(message) from None
        raise ParseError(message, mark.line + 1, mark.column + 1) from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from None
    if not isinstance(data, Mapping):
        raise ParseError("expected a mapping at the top level", 1, 1)
    return data


def _potential(raw: Any) -> MeromorphicPotential:
    try:
        if isinstance(raw, str):
            return MeromorphicPotential.parse(raw)
        return MeromorphicPotential.from_mapping(_mapping(raw, "potential"))
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError("potential", str(exc)) from None


def _strip(raw: Any) -> Strip:
    if isinstance(raw, Mapping):
        d_x, d_y = _number(raw.get("d_x"), "strip"), _number(raw.get("d_y"), "strip")
    else:
        d_x = d_y = _number(raw, "strip")
    try:
        return Strip(d_x, d_y)
    except ValueError as exc:
        raise ValidationError("strip", str(exc)) from None


def _settings(raw: Any) -> NumericsSettings:
    settings = NumericsSettings.from_environment()
    if raw is None:
        return settings
    try:
        return settings.updated(dict(_mapping(raw, "numerics")))
    except KeyError as exc:
        raise ValidationError("numerics", f"unknown setting {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError("numerics", str(exc)) from None


def _h_list(raw: Any, strip: Strip) -> tuple[float, ...]:
    if not isinstance(raw, list) or not raw:
        raise ValidationError("h_list", "expected a non-empty list of step sizes")
    values = tuple(_number(h, "h_list") for h in raw)
    if any(h <= 0 for h in values):
        raise ValidationError("h_list", "step sizes must be positive")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValidationError("h_list_decreasing", f"h_list must be strictly decreasing, got {list(values)}")
    bound = MAX_STEP_FRACTION * strip.d_x
    if values[0] > bound:
        raise ValidationError("h_bound", f"h = {values[0]} exceeds d_x/10 = {bound:g}")
    return values


def _anchors(raw: Any, strip: Strip) -> tuple[complex, complex]:
    data = _mapping(raw, "anchors") if raw is not None else {}
    z0 = _complex(data.get("z0", -0.7 * strip.d_x), "anchors")
    z1 = _complex(data.get("z1", 0.7 * strip.d_x), "anchors")
    if z0.imag != 0 or not -strip.d_x < z0.real < 0:
        raise ValidationError("anchors", f"z0 = {z0} must lie on the negative real axis inside the strip")
    if z1.imag != 0 or not 0 < z1.real < strip.d_x:
        raise ValidationError("anchors", f"z1 = {z1} must lie on the positive real axis inside the strip")
    return z0, z1


def _suites(raw: Any) -> tuple[str, ...]:
    if raw is None:
        return tuple(SUITES)
    if not isinstance(raw, list):
        raise ValidationError("suites", "expected a list of suite names")
    names = tuple(dict.fromkeys(str(name) for name in raw))
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValidationError("suites", f"unknown suites {unknown}; known: {sorted(SUITES)}")
    return names


def _sample_sets(raw: Any, strip: Strip) -> dict[str, tuple[complex, ...]]:
    if raw is None:
        return {"default": default_samples(strip)}
    sets: dict[str, tuple[complex, ...]] = {}
    for name, points in _mapping(raw, "sample_sets").items():
        if not isinstance(points, list) or not points:
            raise ValidationError("sample_sets", f"set {name!r} must be a non-empty list of points")
        values = tuple(_complex(z, "sample_sets") for z in points)
        for z in values:
            if not strip.contains(z, closed=False) or z == 0:
                raise ValidationError("sample_points_in_strip", f"sample point {z} of set {name!r} is outside S")
        sets[str(name)] = values
    return sets


def _output_format(raw: Any) -> str:
    data = _mapping(raw, "output") if raw is not None else {}
    fmt = str(data.get("format", "csv")).lower()
    if fmt not in OUTPUT_FORMATS:
        raise ValidationError("output_format", f"format must be one of {OUTPUT_FORMATS}, got {fmt!r}")
    return fmt


def _thresholds(raw: Any) -> dict[str, dict[str, float]]:
    if raw is None:
        return {}
    out: dict[str, dict[str, float]] = {}
    for suite, metrics in _mapping(raw, "thresholds").items():
        if suite not in SUITES:
            raise ValidationError("thresholds", f"unknown suite {suite!r}")
        known = {metric.name for metric in SUITES[suite].metrics}
        entries: dict[str, float] = {}
        for metric, value in _mapping(metrics, "thresholds").items():
            if metric not in known:
                raise ValidationError("thresholds", f"suite {suite!r} has no metric {metric!r}")
            entries[str(metric)] = _number(value, "thresholds")
        out[str(suite)] = entries
    return out


def parse_config(text: str) -> SweepConfig:
    """Parse and validate a sweep configuration, including the regularity of the strip."""
    data = _load_yaml(text)
    unknown = set(data) - TOP_LEVEL_KEYS
    if unknown:
        raise ValidationError("keys", f"unknown top-level keys {sorted(unknown)}")
    if "potential" not in data:
        raise ValidationError("potential", "missing")
    if "h_list" not in data:
        raise ValidationError("h_list", "missing")

    potential = _potential(data["potential"])
    strip = _strip(data.get("strip", 0.35))
    settings = _settings(data.get("numerics"))
    energy = _complex(data.get("energy", 0), "energy")
    try:
        problem = SpectralProblem(potential, strip, energy, settings)
    except ValueError as exc:
        raise ValidationError("potential", str(exc)) from None

    z0, z1 = _anchors(data.get("anchors"), strip)
    config = SweepConfig(
        problem=problem,
        h_list=_h_list(data["h_list"], strip),
        z0=z0,
        z1=z1,
        suites=_suites(data.get("suites")),
        sample_sets=_sample_sets(data.get("sample_sets"), strip),
        output_format=_output_format(data.get("output")),
        thresholds=_thresholds(data.get("thresholds")),
    )

    report = verify_regular(problem)
    if not report:
        found = ", ".join(f"{z:.6g}" for z in report.turning_points) or "none"
        raise ValidationError(
            "regular_strip",
            f"S minus the pole is not regular (turning points: {found}; min |Im p| = {report.min_abs_im_momentum:.3g})",
        )
    logger.info("config valid: %s, |Im p| margin %.3g", potential.describe(), report.min_abs_im_momentum)
    return replace(config, regularity=report)


def load_config(path: Path) -> SweepConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)
