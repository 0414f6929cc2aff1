"""Numerical defaults shared by the library and the harness."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from typing import Any

POLE_GUARD_ENV = "WKBPOLE_POLE_GUARD"


def _default_pole_guard() -> float:
    raw = os.environ.get(POLE_GUARD_ENV)
    if raw is None or not raw.strip():
        return 1e-12
    try:
        value = float(raw)
    except ValueError:
        return 1e-12
    return value if value > 0 else 1e-12


@dataclass(frozen=True)
class NumericsSettings:
    pole_guard: float = 1e-12
    continuation_step: float = 0.01
    quad_tolerance: float = 1e-11
    max_subdivisions: int = 400
    delta_fraction: float = 0.1
    sector_gap: float = 0.2
    seed_depth: float = 0.6
    log_bound: float = 1e6
    random_seed: int = 20240611
    stirling_radii: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    stirling_angles: tuple[float, ...] = (0.0, 1.0, 2.5)
    extrapolation_offsets: tuple[float, ...] = (0.01, 0.005, 0.0025)
    contour_points: int = 128

    @classmethod
    def from_environment(cls) -> NumericsSettings:
        return cls(pole_guard=_default_pole_guard())

    def updated(self, overrides: dict[str, Any]) -> NumericsSettings:
        """Return a copy with `overrides` applied; unknown keys raise KeyError."""
        known = {f.name: f for f in fields(self)}
        values: dict[str, Any] = {}
        for key, raw in overrides.items():
            if key not in known:
                raise KeyError(key)
            current = getattr(self, key)
            if isinstance(current, tuple):
                values[key] = tuple(float(item) for item in raw)
            elif isinstance(current, int) and not isinstance(current, bool):
                values[key] = int(raw)
            else:
                values[key] = float(raw)
        return replace(self, **values)
