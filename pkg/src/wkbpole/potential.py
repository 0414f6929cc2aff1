"""Meromorphic potentials with a simple pole at zero and their turning points.

A potential is ``residue / z + analytic(z)`` where the analytic part is a sum
of catalog terms. The effective potential of the difference equation is
``w(z) = v(z) - E``.
"""

from __future__ import annotations

import logging
import math
import re
import warnings
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import optimize
from scipy.special import bernoulli

from wkbpole.errors import NonConvergence, OutsideStrip, PoleHit
from wkbpole.settings import NumericsSettings

logger = logging.getLogger(__name__)

MAX_LAURENT_ORDER = 16
_COT_SERIES_RADIUS = 0.05
_COT_SERIES_ORDER = 21


def parse_complex(raw: Any) -> complex:
    """Accept numbers, ``"0.3+0.1j"`` style strings and ``[re, im]`` pairs."""
    if isinstance(raw, bool):
        raise ValueError(f"not a complex number: {raw!r}")
    if isinstance(raw, (int, float, complex)):
        return complex(raw)
    if isinstance(raw, str):
        text = raw.replace(" ", "").replace("i", "j")
        try:
            return complex(text)
        except ValueError as exc:
            raise ValueError(f"not a complex number: {raw!r}") from exc
    if isinstance(raw, Sequence) and len(raw) == 2:
        return complex(float(raw[0]), float(raw[1]))
    raise ValueError(f"not a complex number: {raw!r}")


# ------------------------------------------------------------------------------
# Geometry
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class Strip:
    """The open strip ``|Re z| < d_x, |Im z| < d_y``."""

    d_x: float
    d_y: float

    def __post_init__(self) -> None:
        if not (self.d_x > 0 and self.d_y > 0):
            raise ValueError(f"strip half-widths must be positive, got d_x={self.d_x}, d_y={self.d_y}")

    def contains(self, z: complex, *, closed: bool = False) -> bool:
        if closed:
            return abs(z.real) <= self.d_x and abs(z.imag) <= self.d_y
        return abs(z.real) < self.d_x and abs(z.imag) < self.d_y

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (-self.d_x, self.d_x, -self.d_y, self.d_y)


@dataclass(frozen=True)
class Rectangle:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"empty rectangle {self}")

    def contains(self, z: complex) -> bool:
        return self.x_min <= z.real <= self.x_max and self.y_min <= z.imag <= self.y_max

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def contains(self, z: complex) -> bool:
        return abs(z - self.center) <= self.radius

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        c, r = complex(self.center), self.radius
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)


class Region(Protocol):
    def contains(self, z: complex) -> bool: ...

    @property
    def bounds(self) -> tuple[float, float, float, float]: ...


# ------------------------------------------------------------------------------
# Catalog of analytic terms
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class PolynomialTerm:
    """``sum_k coefficients[k] * z**k``."""

    coefficients: tuple[complex, ...]

    def value(self, z: Any) -> Any:
        return npoly.polyval(z, self.coefficients)

    def derivative(self, z: Any) -> Any:
        return npoly.polyval(z, npoly.polyder(self.coefficients)) if len(self.coefficients) > 1 else 0j * z

    def taylor(self, order: int) -> np.ndarray:
        out = np.zeros(order + 1, dtype=complex)
        n = min(order + 1, len(self.coefficients))
        out[:n] = self.coefficients[:n]
        return out

    def check(self, strip: Strip) -> None:
        return None

    def describe(self) -> str:
        return " + ".join(f"{c:g}*z^{k}" for k, c in enumerate(self.coefficients) if c != 0) or "0"


@dataclass(frozen=True)
class RationalTerm:
    """``coefficient / (z - pole)`` with the pole outside the closed strip."""

    coefficient: complex
    pole: complex

    def value(self, z: Any) -> Any:
        return self.coefficient / (z - self.pole)

    def derivative(self, z: Any) -> Any:
        return -self.coefficient / (z - self.pole) ** 2

    def taylor(self, order: int) -> np.ndarray:
        k = np.arange(order + 1)
        return -self.coefficient / complex(self.pole) ** (k + 1)

    def check(self, strip: Strip) -> None:
        if strip.contains(complex(self.pole), closed=True):
            raise ValueError(f"rational term pole {self.pole} lies in the strip")

    def describe(self) -> str:
        return f"{self.coefficient:g}/(z-({self.pole:g}))"


def _cot_series_coefficients(order: int) -> np.ndarray:
    """Taylor coefficients of ``cot(pi z) - 1/(pi z)`` up to ``z**order``."""
    out = np.zeros(order + 1)
    b = bernoulli(order + 2)
    for n in range(1, (order + 1) // 2 + 1):
        k = 2 * n - 1
        if k > order:
            break
        out[k] = (-1) ** n * 4.0**n * b[2 * n] * math.pi ** (2 * n - 1) / math.factorial(2 * n)
    return out


_COT_SERIES = _cot_series_coefficients(_COT_SERIES_ORDER)


@dataclass(frozen=True)
class CotangentTerm:
    """``coupling * (cot(pi z) - 1/(pi z))``, the regular part of a Maryland potential."""

    coupling: complex

    def value(self, z: Any) -> Any:
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = 1.0 / np.tan(np.pi * z) - 1.0 / (np.pi * z)
        series = npoly.polyval(z, _COT_SERIES)
        out = self.coupling * np.where(np.abs(z) < _COT_SERIES_RADIUS, series, direct)
        return out[()] if out.ndim == 0 else out

    def derivative(self, z: Any) -> Any:
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = -np.pi / np.sin(np.pi * z) ** 2 + 1.0 / (np.pi * z**2)
        series = npoly.polyval(z, npoly.polyder(_COT_SERIES))
        out = self.coupling * np.where(np.abs(z) < _COT_SERIES_RADIUS, series, direct)
        return out[()] if out.ndim == 0 else out

    def taylor(self, order: int) -> np.ndarray:
        return self.coupling * _cot_series_coefficients(order).astype(complex)

    def check(self, strip: Strip) -> None:
        if strip.d_x >= 1.0:
            raise ValueError("cotangent terms need d_x < 1 (poles at nonzero integers)")

    def describe(self) -> str:
        return f"{self.coupling:g}*(cot(pi*z)-1/(pi*z))"


AnalyticTerm = PolynomialTerm | RationalTerm | CotangentTerm


# ------------------------------------------------------------------------------
# Potentials
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class MeromorphicPotential:
    residue: complex
    terms: tuple[AnalyticTerm, ...] = ()
    description: str = ""
    calibration: bool = False

    def __post_init__(self) -> None:
        if self.residue == 0 and not self.calibration:
            raise ValueError("the potential must have a simple pole at 0 (nonzero residue)")
        if self.calibration and self.residue != 0:
            raise ValueError("calibration potentials carry no pole")

    @classmethod
    def constant(cls, value: complex) -> MeromorphicPotential:
        """A pole-free constant potential for constant-coefficient checks."""
        return cls(0j, (PolynomialTerm((complex(value),)),), f"constant {value}", calibration=True)

    @classmethod
    def maryland(cls, coupling: float) -> MeromorphicPotential:
        """``coupling * cot(pi z)``."""
        return cls(coupling / math.pi, (CotangentTerm(coupling),), f"{coupling:g}*cot(pi*z)")

    @classmethod
    def parse(cls, text: str) -> MeromorphicPotential:
        """Parse sums like ``"1/z + 0.3*z"`` or ``"0.5*cot(pi*z) - 2"``."""
        return _parse_expression(text)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> MeromorphicPotential:
        unknown = set(data) - {"residue", "polynomial", "rational", "cotangent", "description"}
        if unknown:
            raise ValueError(f"unknown potential keys: {sorted(unknown)}")
        residue = parse_complex(data.get("residue", 0))
        terms: list[AnalyticTerm] = []
        if data.get("polynomial"):
            terms.append(PolynomialTerm(tuple(parse_complex(c) for c in data["polynomial"])))
        for item in data.get("rational") or ():
            terms.append(RationalTerm(parse_complex(item["coefficient"]), parse_complex(item["pole"])))
        if data.get("cotangent") is not None:
            coupling = parse_complex(data["cotangent"])
            residue += coupling / math.pi
            terms.append(CotangentTerm(coupling))
        return cls(residue, tuple(terms), str(data.get("description", "")))

    def value(self, z: Any) -> Any:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.residue / z if self.residue != 0 else 0j * np.asarray(z)
        for term in self.terms:
            out = out + term.value(z)
        return out

    def derivative(self, z: Any) -> Any:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -self.residue / np.asarray(z) ** 2 if self.residue != 0 else 0j * np.asarray(z)
        for term in self.terms:
            out = out + term.derivative(z)
        return out

    def taylor(self, order: int) -> np.ndarray:
        out = np.zeros(order + 1, dtype=complex)
        for term in self.terms:
            out += term.taylor(order)
        return out

    def describe(self) -> str:
        if self.description:
            return self.description
        parts = [f"{self.residue:g}/z"] if self.residue != 0 else []
        parts.extend(term.describe() for term in self.terms)
        return " + ".join(parts) or "0"


_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_RESIDUE_RE = re.compile(rf"^(?P<c>{_NUMBER})?(?:\*)?/z$")
_POWER_RE = re.compile(rf"^(?:(?P<c>{_NUMBER})\*)?z(?:(?:\^|\*\*)(?P<k>\d+))?$")
_COT_RE = re.compile(rf"^(?:(?P<c>{_NUMBER})\*)?cot\(pi\*z\)$")
_RATIONAL_RE = re.compile(rf"^(?P<c>{_NUMBER})?/\(z(?P<shift>[+-]{_NUMBER})\)$")
_CONSTANT_RE = re.compile(rf"^{_NUMBER}$")


def _split_terms(text: str) -> list[str]:
    chunks: list[str] = []
    depth = 0
    current = ""
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and current and text[i - 1] not in "eE*/^":
            chunks.append(current)
            current = ""
        current += ch
    if current:
        chunks.append(current)
    return chunks


def _parse_expression(text: str) -> MeromorphicPotential:
    compact = text.replace(" ", "")
    if not compact:
        raise ValueError("empty potential expression")
    residue = 0j
    poly: dict[int, complex] = {}
    cot = 0j
    rational: list[RationalTerm] = []
    for chunk in _split_terms(compact):
        sign = -1.0 if chunk.startswith("-") else 1.0
        body = chunk.lstrip("+-")
        if match := _RESIDUE_RE.match(body):
            residue += sign * float(match["c"] or 1.0)
        elif match := _RATIONAL_RE.match(body):
            rational.append(RationalTerm(complex(sign * float(match["c"] or 1.0)), complex(-float(match["shift"]))))
        elif match := _COT_RE.match(body):
            cot += sign * float(match["c"] or 1.0)
        elif match := _POWER_RE.match(body):
            power = int(match["k"] or 1)
            poly[power] = poly.get(power, 0j) + sign * float(match["c"] or 1.0)
        elif _CONSTANT_RE.match(body):
            poly[0] = poly.get(0, 0j) + sign * float(body)
        else:
            raise ValueError(f"cannot parse potential term {chunk!r} in {text!r}")

    terms: list[AnalyticTerm] = []
    if poly:
        coefficients = [poly.get(k, 0j) for k in range(max(poly) + 1)]
        terms.append(PolynomialTerm(tuple(coefficients)))
    terms.extend(rational)
    if cot != 0:
        residue += cot / math.pi
        terms.append(CotangentTerm(cot))
    return MeromorphicPotential(residue, tuple(terms), text.strip())


# ------------------------------------------------------------------------------
# Problems
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class SpectralProblem:
    """The equation ``psi(z+h) + psi(z-h) + w(z) psi(z) = 0`` with ``w = v - E``."""

    potential: MeromorphicPotential
    strip: Strip
    energy: complex = 0j
    settings: NumericsSettings = field(default_factory=NumericsSettings.from_environment)

    def __post_init__(self) -> None:
        for term in self.potential.terms:
            term.check(self.strip)

    @property
    def pole_guard(self) -> float:
        return self.settings.pole_guard

    def w(self, z: Any) -> Any:
        """``v(z) - E`` without domain checks; accepts arrays."""
        return self.potential.value(z) - self.energy

    def w_prime(self, z: Any) -> Any:
        return self.potential.derivative(z)


def evaluate(problem: SpectralProblem, z: complex) -> complex:
    """``w(z) = v(z) - E`` at a point of the strip."""
    z = complex(z)
    if not problem.strip.contains(z):
        raise OutsideStrip(f"{z} is outside the strip |Re z| < {problem.strip.d_x}, |Im z| < {problem.strip.d_y}")
    if not problem.potential.calibration and abs(z) <= problem.pole_guard:
        raise PoleHit(f"|{z}| is within the pole guard {problem.pole_guard:g}")
    return complex(problem.w(z))


def laurent(problem: SpectralProblem, order: int) -> tuple[complex, list[complex]]:
    """Residue and Taylor coefficients ``c_0..c_order`` of ``w`` at 0."""
    if not 0 <= order <= MAX_LAURENT_ORDER:
        raise ValueError(f"order must be in [0, {MAX_LAURENT_ORDER}], got {order}")
    coefficients = problem.potential.taylor(order)
    coefficients[0] -= problem.energy
    return complex(problem.potential.residue), [complex(c) for c in coefficients]


# ------------------------------------------------------------------------------
# Turning points
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class RegularityReport:
    regular: bool
    turning_points: tuple[complex, ...]
    min_abs_im_momentum: float
    worst_point: complex

    def __bool__(self) -> bool:
        return self.regular


def _seed_grid(bounds: tuple[float, float, float, float], n: int) -> np.ndarray:
    x_min, x_max, y_min, y_max = bounds
    xs = x_min + (np.arange(n) + 0.5) * (x_max - x_min) / n
    ys = y_min + (np.arange(n) + 0.5) * (y_max - y_min) / n
    return (xs[None, :] + 1j * ys[:, None]).ravel()


def _newton(
    problem: SpectralProblem,
    seed: complex,
    target: float,
    region: Region,
    max_iterations: int,
    tolerance: float,
) -> complex | None:
    """Newton's method for ``w(z) = target`` from ``seed``.

    Returns ``None`` when the iteration diverges or ends outside ``region``.
    An iterate that stalls inside ``region`` close to a root, as at a double
    turning point, is a genuine failure.
    """

    def residual(z: complex) -> complex:
        return complex(problem.w(z)) - target

    def slope(z: complex) -> complex:
        return complex(problem.w_prime(z))

    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            root, result = optimize.newton(
                residual, seed, fprime=slope, tol=1e-14, maxiter=max_iterations, full_output=True, disp=False
            )
        except ArithmeticError:
            return None
    root = complex(root)
    if not (math.isfinite(root.real) and math.isfinite(root.imag)):
        return None
    if result.converged or not region.contains(root):
        return root
    gap = abs(residual(root))
    if gap < math.sqrt(tolerance):
        raise NonConvergence(f"Newton from {seed} stalled at {root} (residual {gap:.2e})")
    return None


def turning_points(
    problem: SpectralProblem,
    region: Region,
    seeds_per_axis: int = 8,
    *,
    max_iterations: int = 80,
    tolerance: float = 1e-10,
) -> list[complex]:
    """Roots of ``w(z) = +-2`` inside ``region``, deduplicated and sorted.

    Seeds sit at the cell centres of a ``seeds_per_axis`` grid over the
    region's bounding box; iterations ending outside the region are dropped.
    """
    if seeds_per_axis < 1:
        raise ValueError("seeds_per_axis must be positive")
    guard = max(problem.pole_guard, 1e-12)

    roots: list[complex] = []
    for target in (2.0, -2.0):
        for seed in _seed_grid(region.bounds, seeds_per_axis):
            seed = complex(seed)
            if abs(seed) <= guard:
                continue
            root = _newton(problem, seed, target, region, max_iterations, tolerance)
            if root is None or abs(root) <= guard or not region.contains(root):
                continue
            if abs(complex(problem.w(root)) - target) >= tolerance:
                continue
            if all(abs(root - known) > 1e-8 for known in roots):
                roots.append(root)
    roots.sort(key=lambda r: (round(r.real, 9), round(r.imag, 9)))
    logger.debug("found %d turning points in %s", len(roots), region)
    return roots


def _interior_grid(strip: Strip, n: int) -> np.ndarray:
    xs = np.linspace(-strip.d_x, strip.d_x, n + 2)[1:-1]
    ys = np.linspace(-strip.d_y, strip.d_y, n + 2)[1:-1]
    return (xs[None, :] + 1j * ys[:, None]).ravel()


def momentum_margin(problem: SpectralProblem, points: Iterable[complex]) -> tuple[float, complex]:
    """Smallest ``|Im p|`` over ``points`` and where it occurs."""
    z = np.asarray(list(points), dtype=complex)
    with np.errstate(all="ignore"):
        im = np.abs(np.arccos(-problem.w(z) / 2.0).imag)
    index = int(np.argmin(im))
    return float(im[index]), complex(z[index])


def verify_regular(problem: SpectralProblem, *, seeds_per_axis: int = 8, grid_points: int = 41) -> RegularityReport:
    """Whether ``S`` minus the pole is free of turning points and of real momenta."""
    strip = problem.strip
    region = Rectangle(-strip.d_x, strip.d_x, -strip.d_y, strip.d_y)
    inside = [
        z
        for z in turning_points(problem, region, seeds_per_axis)
        if strip.contains(z, closed=False)
    ]
    grid = [complex(z) for z in _interior_grid(strip, grid_points) if abs(z) > max(problem.pole_guard, 1e-9)]
    margin, worst = momentum_margin(problem, grid)
    regular = not inside and margin > 0.0 and math.isfinite(margin)
    if not regular:
        logger.info("strip is not regular: %d turning points, |Im p| margin %.3g at %s", len(inside), margin, worst)
    return RegularityReport(regular, tuple(inside), margin, worst)


def sample_strip(problem: SpectralProblem, count: int, seed: int) -> list[complex]:
    """Reproducible random points of the strip away from the pole guard."""
    rng = np.random.default_rng(seed)
    out: list[complex] = []
    while len(out) < count:
        z = complex(rng.uniform(-problem.strip.d_x, problem.strip.d_x), rng.uniform(-problem.strip.d_y, problem.strip.d_y))
        if abs(z) > 1e3 * problem.pole_guard:
            out.append(z)
    return out

