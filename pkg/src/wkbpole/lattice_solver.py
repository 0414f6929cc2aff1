"""Exact solutions of ``psi(z+h) + psi(z-h) + w(z) psi(z) = 0`` on lattice lines.

A lattice line is ``{theta + k h : k_min <= k <= k_max}``. Values are kept as
complex logarithms: the recursion runs on a rescaled pair of raw values and
folds the scale into the stored logs whenever it leaves ``[1e-100, 1e100]``.
"""

from __future__ import annotations

import cmath
import enum
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from wkbpole.asymptotics import AsymptoticModel
from wkbpole.errors import (
    DegenerateBasis,
    ExtrapolationUnstable,
    IllConditioned,
    OutsideSeedRegion,
    OutsideStrip,
    Overflow,
    PoleOnLattice,
    RangeError,
)
from wkbpole.logspace import LogValue, log_of
from wkbpole.potential import SpectralProblem

logger = logging.getLogger(__name__)

RESCALE_HIGH = 1e100
RESCALE_LOW = 1e-100
DEGENERATE_WRONSKIAN = 1e-6


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class LatticeLine:
    theta: complex
    h: float
    k_min: int
    k_max: int

    def __post_init__(self) -> None:
        if self.h <= 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.k_max <= self.k_min:
            raise ValueError(f"empty range [{self.k_min}, {self.k_max}]")

    @property
    def size(self) -> int:
        return self.k_max - self.k_min + 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def points(self) -> np.ndarray:
        return self.theta + self.ks * self.h

    def point(self, k: int) -> complex:
        return complex(self.theta + k * self.h)

    def index(self, k: int) -> int:
        if not self.k_min <= k <= self.k_max:
            raise RangeError(f"k = {k} outside [{self.k_min}, {self.k_max}]")
        return k - self.k_min


@dataclass(frozen=True)
class SeedProvenance:
    source: str
    ks: tuple[int, int]
    direction: Direction


@dataclass(frozen=True)
class LatticeSolution:
    line: LatticeLine
    logs: np.ndarray
    provenance: SeedProvenance

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.logs)

    def log_at(self, k: int) -> complex:
        return complex(self.logs[self.line.index(k)])

    def at(self, k: int) -> LogValue:
        return LogValue(self.log_at(k))

    def scaled(self, log_factor: complex) -> LatticeSolution:
        return LatticeSolution(self.line, self.logs + log_factor, self.provenance)


def _as_log(seed: LogValue | complex) -> complex:
    return seed.log if isinstance(seed, LogValue) else log_of(complex(seed))


def seed_depth(problem: SpectralProblem) -> float:
    """The distance ``c`` from the imaginary axis beyond which seeds are placed."""
    return problem.settings.seed_depth * problem.strip.d_x


def propagate(
    problem: SpectralProblem,
    line: LatticeLine,
    seeds: tuple[LogValue | complex, LogValue | complex],
    *,
    direction: Direction = Direction.FORWARD,
    pole_tolerance: float | None = None,
    source: str = "manual",
) -> LatticeSolution:
    """Run the three-term recursion along ``line``.

    ``seeds`` are the values at the two lowest ``k`` for a forward run and at
    the two highest ``k`` for a backward run, listed in increasing ``k``.
    """
    points = line.points
    for z in points:
        if not problem.strip.contains(complex(z)):
            raise OutsideStrip(f"lattice point {z} is outside the strip")
    tolerance = 1e-3 * line.h if pole_tolerance is None else pole_tolerance
    if not problem.potential.calibration:
        nearest = float(np.min(np.abs(points)))
        if nearest <= max(tolerance, problem.pole_guard):
            raise PoleOnLattice(f"a lattice point lies within {nearest:.2e} of the pole")

    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.asarray(problem.w(points), dtype=complex) * np.ones(line.size)
    log_a, log_b = (_as_log(seeds[0]), _as_log(seeds[1]))
    if direction is Direction.BACKWARD:
        w = w[::-1]
        log_a, log_b = log_b, log_a
    scale = max(log_a.real, log_b.real)
    if math.isinf(scale):
        raise ValueError("both seeds vanish")
    a = cmath.exp(log_a - scale)
    b = cmath.exp(log_b - scale)

    bound = problem.settings.log_bound
    logs = np.empty(line.size, dtype=complex)
    logs[0], logs[1] = log_a, log_b
    for i in range(1, line.size - 1):
        c = -w[i] * b - a
        a, b = b, c
        size = max(abs(a), abs(b))
        if size > RESCALE_HIGH or 0.0 < size < RESCALE_LOW:
            a, b = a / size, b / size
            scale += math.log(size)
            if abs(scale) > bound:
                raise Overflow(f"log-magnitude {scale:.3g} exceeds the bound {bound:g} at step {i}")
        logs[i + 1] = scale + log_of(b)

    if direction is Direction.BACKWARD:
        logs = logs[::-1]
        ks = (line.k_max - 1, line.k_max)
    else:
        ks = (line.k_min, line.k_min + 1)
    return LatticeSolution(line, logs, SeedProvenance(source, ks, direction))


def linear_combination(coefficients: Sequence[complex], solutions: Sequence[LatticeSolution]) -> LatticeSolution:
    """``sum_j coefficients[j] * solutions[j]`` on a common line."""
    line = solutions[0].line
    if any(sol.line != line for sol in solutions):
        raise RangeError("solutions live on different lines")
    stacked = np.array([sol.logs + log_of(complex(c)) for c, sol in zip(coefficients, solutions)])
    peak = np.max(stacked.real, axis=0)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(divide="ignore"):
        logs = peak + np.log(np.sum(np.exp(stacked - peak), axis=0))
    return LatticeSolution(line, logs, SeedProvenance("combination", (line.k_min, line.k_min + 1), Direction.FORWARD))


# ------------------------------------------------------------------------------
# Wronskians and basis coefficients
# ------------------------------------------------------------------------------
def _log_difference(l1: complex, l2: complex) -> complex:
    """A logarithm of ``exp(l1) - exp(l2)``."""
    peak = max(l1.real, l2.real)
    if math.isinf(peak) and peak < 0:
        return complex(-math.inf, 0.0)
    return peak + log_of(cmath.exp(l1 - peak) - cmath.exp(l2 - peak))


def _wronskian_terms(sol1: LatticeSolution, sol2: LatticeSolution, k: int) -> tuple[complex, complex]:
    if sol1.line != sol2.line:
        raise RangeError("Wronskian of solutions on different lines")
    i = sol1.line.index(k)
    sol1.line.index(k + 1)
    return complex(sol1.logs[i + 1] + sol2.logs[i]), complex(sol1.logs[i] + sol2.logs[i + 1])


def log_wronskian(sol1: LatticeSolution, sol2: LatticeSolution, k: int) -> LogValue:
    """``psi1(z+h) psi2(z) - psi1(z) psi2(z+h)`` at ``z = theta + k h``, as a logarithm."""
    return LogValue(_log_difference(*_wronskian_terms(sol1, sol2, k)))


def wronskian_condition(sol1: LatticeSolution, sol2: LatticeSolution, k: int) -> float:
    """``(|psi1(z+h) psi2(z)| + |psi1(z) psi2(z+h)|) / |w|``, the cancellation factor of the Wronskian.

    Relative errors of the lattice values reach the Wronskian multiplied by
    this factor; it is infinite when the two terms cancel exactly.
    """
    l1, l2 = _wronskian_terms(sol1, sol2, k)
    log_w = _log_difference(l1, l2).real
    if math.isinf(log_w):
        return math.inf
    gap = float(np.logaddexp(l1.real, l2.real)) - log_w
    return math.inf if gap > 700.0 else math.exp(gap)


def wronskian(sol1: LatticeSolution, sol2: LatticeSolution, k: int) -> complex:
    return log_wronskian(sol1, sol2, k).value


def wronskian_drift(sol1: LatticeSolution, sol2: LatticeSolution) -> float:
    """Largest relative change of the Wronskian along the line."""
    line = sol1.line
    ks = range(line.k_min, line.k_max)
    reference = log_wronskian(sol1, sol2, line.k_min + (line.size - 1) // 2)
    if math.isinf(reference.log.real):
        return 0.0
    return max(log_wronskian(sol1, sol2, k).relative_deviation(reference) for k in ks)


def coefficient_conditions(
    sol: LatticeSolution, basis1: LatticeSolution, basis2: LatticeSolution, k: int
) -> tuple[float, float]:
    """Error amplification of the two coefficients returned by :func:`coefficients` at ``k``."""
    denominator = wronskian_condition(basis1, basis2, k)
    return wronskian_condition(sol, basis2, k) + denominator, wronskian_condition(basis1, sol, k) + denominator


def coefficients(
    sol: LatticeSolution,
    basis1: LatticeSolution,
    basis2: LatticeSolution,
    k: int,
    *,
    max_condition: float | None = None,
) -> tuple[complex, complex]:
    """``(a, b)`` with ``sol = a basis1 + b basis2`` on the line.

    Each coefficient is a ratio of Wronskians. With ``max_condition`` both
    must be resolved at ``k``: a coefficient whose Wronskians cancel by more
    than that factor (see :func:`coefficient_conditions`) raises ``IllConditioned``.
    """
    denominator = log_wronskian(basis1, basis2, k)
    if denominator.log.real < math.log(DEGENERATE_WRONSKIAN):
        raise DegenerateBasis(f"|w(basis1, basis2)| = {math.exp(denominator.log.real):.2e} at k = {k}")
    if max_condition is not None:
        for name, condition in zip("ab", coefficient_conditions(sol, basis1, basis2, k)):
            if condition > max_condition:
                raise IllConditioned(f"coefficient {name} at k = {k}: cancellation factor {condition:.2e}")
    a = log_wronskian(sol, basis2, k) / denominator
    b = log_wronskian(basis1, sol, k) / denominator
    return a.value, b.value


def recurrence_residual(problem: SpectralProblem, sol: LatticeSolution) -> float:
    """Largest relative residual of the recursion at interior points."""
    logs = sol.logs
    with np.errstate(divide="ignore", invalid="ignore"):
        log_w = np.log(np.asarray(problem.w(sol.line.points), dtype=complex) * np.ones(sol.line.size))
    worst = 0.0
    for i in range(1, sol.line.size - 1):
        terms = np.array([logs[i + 1], logs[i - 1], log_w[i] + logs[i]])
        peak = float(np.max(terms.real))
        if math.isinf(peak):
            continue
        scaled = np.exp(terms - peak)
        worst = max(worst, abs(scaled.sum()) / float(np.abs(scaled).sum()))
    return worst


# ------------------------------------------------------------------------------
# Lines and seeds
# ------------------------------------------------------------------------------
def line_to(
    problem: SpectralProblem,
    z: complex,
    h: float,
    *,
    direction: Direction = Direction.FORWARD,
    steps: int | None = None,
) -> LatticeLine:
    """A line ending (forward) or starting (backward) at ``z`` whose far end is in the seed region.

    ``steps`` fixes the number of lattice steps instead of the shortest one
    reaching the seed region; points sharing it are joined to their seeds by
    the same polynomial in ``w``.
    """
    z = complex(z)
    c = seed_depth(problem)
    if direction is Direction.FORWARD:
        steps = steps or max(1, math.ceil((z.real + c) / h - 1e-9) + 1)
        return LatticeLine(z, h, -steps, 0)
    steps = steps or max(1, math.ceil((c - z.real) / h - 1e-9) + 1)
    return LatticeLine(z, h, 0, steps)


def spanning_line(problem: SpectralProblem, height: float, h: float) -> LatticeLine:
    """A horizontal line at ``height`` reaching both seed regions."""
    half = seed_depth(problem) + h
    return LatticeLine(complex(-half, height), h, 0, math.ceil(2.0 * half / h))


def _check_left(problem: SpectralProblem, points: Sequence[complex]) -> None:
    c = seed_depth(problem)
    for z in points:
        if z.real > -c + 1e-12:
            raise OutsideSeedRegion(f"seed point {z} is right of -c = {-c:.4g}")


def _check_right(problem: SpectralProblem, points: Sequence[complex]) -> None:
    c = seed_depth(problem)
    for z in points:
        if z.real < c - 1e-12:
            raise OutsideSeedRegion(f"seed point {z} is left of c = {c:.4g}")


def seed_wkb(model: AsymptoticModel, line: LatticeLine, k0: int) -> tuple[LogValue, LogValue]:
    """Standard-behaviour values at ``k0`` and ``k0 + 1`` deep in the left seed region."""
    points = (line.point(k0), line.point(k0 + 1))
    _check_left(model.problem, points)
    return model.wkb_leading(points[0]), model.wkb_leading(points[1])


def seed_mirrored(
    model: AsymptoticModel, line: LatticeLine, k0: int, *, source: str = "phi"
) -> tuple[LogValue, LogValue]:
    """Seeds for ``phi`` (or ``f_minus``) at ``k0`` and ``k0 + 1`` in the right seed region."""
    points = (line.point(k0), line.point(k0 + 1))
    _check_right(model.problem, points)
    if source == "phi":
        return model.phi_standard(points[0]), model.phi_standard(points[1])
    if source == "f_minus":
        return model.f_minus_standard(points[0]), model.f_minus_standard(points[1])
    raise ValueError(f"unknown mirrored seed {source!r}")


def solve_psi(model: AsymptoticModel, line: LatticeLine, pole_tolerance: float | None = None) -> LatticeSolution:
    seeds = seed_wkb(model, line, line.k_min)
    return propagate(model.problem, line, seeds, source="wkb", pole_tolerance=pole_tolerance)


def solve_f_plus(model: AsymptoticModel, line: LatticeLine, pole_tolerance: float | None = None) -> LatticeSolution:
    return solve_psi(model, line, pole_tolerance).scaled(-model.log_n0)


def solve_phi(model: AsymptoticModel, line: LatticeLine, pole_tolerance: float | None = None) -> LatticeSolution:
    seeds = seed_mirrored(model, line, line.k_max - 1, source="phi")
    return propagate(
        model.problem, line, seeds, direction=Direction.BACKWARD, source="phi", pole_tolerance=pole_tolerance
    )


def solve_f_minus(model: AsymptoticModel, line: LatticeLine, pole_tolerance: float | None = None) -> LatticeSolution:
    seeds = seed_mirrored(model, line, line.k_max - 1, source="f_minus")
    return propagate(
        model.problem, line, seeds, direction=Direction.BACKWARD, source="f_minus", pole_tolerance=pole_tolerance
    )


# ------------------------------------------------------------------------------
# Pole and zero structure
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class ResidueRecord:
    solution: str
    n: int
    h: float
    offsets: tuple[float, ...]
    logs: tuple[complex, ...]  # logs of delta*f (poles) or f/delta (zeros)
    limit: LogValue
    residual: float
    slope: complex
    consistent: bool


_RESIDUE_TARGETS = {
    # solution: (direction, sign of the lattice point, pole or zero)
    "psi": (Direction.FORWARD, 1, "pole"),
    "f_plus": (Direction.FORWARD, 1, "pole"),
    "phi": (Direction.BACKWARD, -1, "pole"),
    "f_minus": (Direction.BACKWARD, 1, "zero"),
}


def _approach_line(problem: SpectralProblem, direction: Direction, k_target: int, offset: float, h: float, widest: float) -> LatticeLine:
    c = seed_depth(problem)
    if direction is Direction.FORWARD:
        k_min = -math.ceil((c + widest) / h) - 1
        return LatticeLine(complex(offset, 0.0), h, k_min, max(k_target, k_min + 1))
    k_max = max(math.ceil(c / h) + 1, k_target + 1)
    return LatticeLine(complex(offset, 0.0), h, k_target, k_max)


def residue_extrapolation(
    problem: SpectralProblem,
    model: AsymptoticModel,
    n: int,
    h: float,
    *,
    solution: str = "psi",
    threshold: float = 0.05,
) -> ResidueRecord:
    """Extrapolate to the simple pole (or zero) of a lattice solution at ``n h`` (``-n h`` for ``phi``).

    The solution is computed on real lines ``theta = delta_j`` for shrinking
    offsets; ``delta f(n h + delta)`` (or ``f / delta`` for zeros) is
    extrapolated linearly to ``delta = 0`` from two pairs of offsets, and the
    relative gap of the two extrapolants is the consistency residual.
    """
    if solution not in _RESIDUE_TARGETS:
        raise ValueError(f"unknown solution {solution!r}; expected one of {sorted(_RESIDUE_TARGETS)}")
    if abs(h - model.h) > 1e-15 * h:
        raise ValueError(f"model built for h={model.h}, extrapolation asked for h={h}")
    if n < 0 or n * h > problem.strip.d_x:
        raise OutsideStrip(f"n h = {n * h:g} is outside the strip")
    direction, sign, kind = _RESIDUE_TARGETS[solution]
    offsets = tuple(float(d) * h for d in problem.settings.extrapolation_offsets)
    if len(offsets) < 3:
        raise ValueError("residue extrapolation needs three offsets")
    k_target = sign * n

    logs = []
    for offset in offsets:
        line = _approach_line(problem, direction, k_target, offset, h, max(offsets))
        if solution == "psi":
            sol = solve_psi(model, line)
        elif solution == "f_plus":
            sol = solve_f_plus(model, line)
        elif solution == "phi":
            sol = solve_phi(model, line)
        else:
            sol = solve_f_minus(model, line)
        log_f = sol.log_at(k_target)
        logs.append(log_f + math.log(offset) if kind == "pole" else log_f - math.log(offset))

    base = logs[0]
    ratios = [cmath.exp(value - base) for value in logs]
    d1, d2, d3 = offsets[:3]
    r1, r2, r3 = ratios[:3]
    first = (d1 * r2 - d2 * r1) / (d1 - d2)
    second = (d2 * r3 - d3 * r2) / (d2 - d3)
    if not (cmath.isfinite(first) and cmath.isfinite(second)) or second == 0:
        raise ExtrapolationUnstable(f"{solution} extrapolation at n={n}: extrapolants {first}, {second}")
    residual = abs(first - second) / abs(second)
    slope = (r2 - r3) / (d2 - d3) * cmath.exp(base)
    limit = LogValue(base + cmath.log(second))
    logger.debug("%s extrapolation at n=%d, h=%g: residual %.2e", solution, n, h, residual)
    return ResidueRecord(solution, n, h, offsets, tuple(logs), limit, residual, slope, residual < threshold)
