"""Verification suites run by the sweep.

A suite receives a :class:`SuiteContext` (one problem, one ``h``) and returns
one :class:`Measurement` per declared metric. Suites build their own
:class:`~wkbpole.asymptotics.AsymptoticModel`, so disabling one never changes
the numbers of another.
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from wkbpole.asymptotics import AsymptoticModel, maximum_principle
from wkbpole.errors import IllConditioned
from wkbpole.lattice_solver import (
    LatticeSolution,
    coefficient_conditions,
    coefficients,
    line_to,
    residue_extrapolation,
    seed_depth,
    solve_f_minus,
    solve_f_plus,
    solve_phi,
    solve_psi,
    spanning_line,
    wronskian,
    wronskian_drift,
)
from wkbpole.logspace import LogValue
from wkbpole.momentum import contour_coefficients
from wkbpole.potential import SpectralProblem
from wkbpole.specfun import SectorSpec, gamma, reflection, stirling_error

logger = logging.getLogger(__name__)

# horizontal segment of the continuation check
SEGMENT_HEIGHT = 0.1
SEGMENT_HALF_WIDTH = 0.25
# largest cancellation factor at which a basis coefficient of phi is trusted
MAX_CONDITION = 1e4


class MetricKind(enum.Enum):
    CONVERGENT = "convergent"  # threshold at the finest h, strictly decreasing along the sweep
    EXACT = "exact"  # threshold at every h
    INFO = "info"


@dataclass(frozen=True)
class Metric:
    name: str
    kind: MetricKind
    threshold: float | None = None
    description: str = ""


@dataclass(frozen=True)
class Measurement:
    value: float
    mean: float | None = None
    worst_point: complex | None = None


@dataclass(frozen=True)
class SuiteContext:
    problem: SpectralProblem
    h: float
    z0: complex
    z1: complex
    samples: tuple[complex, ...]

    @cached_property
    def model(self) -> AsymptoticModel:
        return AsymptoticModel.build(self.problem, self.h, self.z0, self.z1)

    @property
    def delta(self) -> float:
        """Width of the tube around ``R+`` and radius of the disk around the pole."""
        return self.problem.settings.delta_fraction * self.problem.strip.d_x


SuiteFunc = Callable[[SuiteContext], dict[str, Measurement]]


@dataclass(frozen=True)
class Suite:
    name: str
    description: str
    metrics: tuple[Metric, ...]
    run: SuiteFunc

    def metric(self, name: str) -> Metric:
        for metric in self.metrics:
            if metric.name == name:
                return metric
        raise KeyError(f"suite {self.name!r} has no metric {name!r}")


SUITES: dict[str, Suite] = {}


def register(name: str, description: str, metrics: Sequence[Metric]) -> Callable[[SuiteFunc], SuiteFunc]:
    def decorator(func: SuiteFunc) -> SuiteFunc:
        SUITES[name] = Suite(name, description, tuple(metrics), func)
        return func

    return decorator


# ------------------------------------------------------------------------------
# Helpers
# ------------------------------------------------------------------------------
def _distance_to_rplus(z: complex) -> float:
    return abs(z.imag) if z.real >= 0 else abs(z)


def _clear_of_lattice(z: complex, h: float) -> bool:
    """Outside the ``h/4`` disks around ``h N``."""
    n = max(1, round(z.real / h))
    return abs(z - n * h) >= 0.25 * h


def _deviations(rows: Iterable[tuple[complex, LogValue, LogValue]]) -> Measurement:
    """Max and mean of ``|value / reference - 1|`` with the worst point."""
    points, errors = [], []
    for z, value, reference in rows:
        points.append(z)
        errors.append(value.relative_deviation(reference))
    if not errors:
        raise ValueError("no points to compare")
    index = int(np.argmax(errors))
    return Measurement(float(errors[index]), float(np.mean(errors)), points[index])


def _recursion_psi(ctx: SuiteContext, z: complex, steps: int | None = None) -> LogValue:
    return solve_psi(ctx.model, line_to(ctx.problem, z, ctx.h, steps=steps)).at(0)


def _off_tube(ctx: SuiteContext) -> list[complex]:
    points = [z for z in ctx.samples if _distance_to_rplus(z) >= ctx.delta]
    if not points:
        raise ValueError("no sample point lies outside the tube around R+")
    return points


def _tube_points(ctx: SuiteContext) -> list[complex]:
    d_x = ctx.problem.strip.d_x
    xs = np.linspace(2.0 * ctx.delta, 0.8 * d_x, 6)
    points = [complex(x, y) for x in xs for y in (0.5 * ctx.delta, -0.5 * ctx.delta)]
    return [z for z in points if _clear_of_lattice(z, ctx.h)]


# ------------------------------------------------------------------------------
# Suites
# ------------------------------------------------------------------------------
@register(
    "wkb",
    "Recursion psi against the standard WKB form at sample points away from R+ and the pole.",
    (
        Metric("max_rel_error", MetricKind.CONVERGENT, 0.25, "max |psi / wkb - 1|"),
        Metric("mean_rel_error", MetricKind.INFO),
    ),
)
def wkb_suite(ctx: SuiteContext) -> dict[str, Measurement]:
    result = _deviations((z, _recursion_psi(ctx, z), ctx.model.wkb_leading(z)) for z in _off_tube(ctx))
    return {"max_rel_error": result, "mean_rel_error": Measurement(result.mean or 0.0)}


@register(
    "uniform_gamma",
    "Uniform Gamma law: recursion psi over n0 G0 Gamma(1 - z/h) on all samples, its reduction to WKB, "
    "and the maximum principle for the ratio on a circle around the pole.",
    (
        Metric("max_ratio_error", MetricKind.CONVERGENT, 0.1, "max |psi / (n0 G0 Gamma) - 1|"),
        Metric("mean_ratio_error", MetricKind.INFO),
        Metric("reduces_to_wkb", MetricKind.CONVERGENT, 0.25, "max |uniform / wkb - 1| off the R+ tube"),
        Metric("max_principle", MetricKind.EXACT, 1.0, "interior max over circle max of |ratio - 1|"),
    ),
)
def uniform_gamma_suite(ctx: SuiteContext) -> dict[str, Measurement]:
    model = ctx.model
    ratio = _deviations((z, _recursion_psi(ctx, z), model.psi_uniform(z)) for z in ctx.samples)
    reduction = _deviations((z, model.psi_uniform(z), model.wkb_leading(z)) for z in _off_tube(ctx))

    radius = ctx.delta
    steps = math.ceil((radius + seed_depth(ctx.problem)) / ctx.h) + 1

    def ratio_minus_one(z: complex) -> complex:
        return _recursion_psi(ctx, z, steps).ratio_to(model.psi_uniform(z)) - 1.0

    interior = [0.5 * radius * complex(math.cos(a), math.sin(a)) for a in np.linspace(0.3, 0.3 + 2 * math.pi, 6, endpoint=False)]
    principle = maximum_principle(ratio_minus_one, radius, interior)
    return {
        "max_ratio_error": ratio,
        "mean_ratio_error": Measurement(ratio.mean or 0.0),
        "reduces_to_wkb": reduction,
        "max_principle": Measurement(principle.ratio, worst_point=principle.worst_interior),
    }


@register(
    "near_rplus",
    "Near-R+ form against the uniform law and against recursion psi inside the tube around R+.",
    (
        Metric("uniform_vs_near", MetricKind.CONVERGENT, 0.25),
        Metric("recursion_vs_near", MetricKind.CONVERGENT, 0.25),
    ),
)
def near_rplus_suite(ctx: SuiteContext) -> dict[str, Measurement]:
    model = ctx.model
    points = _tube_points(ctx)
    near = {z: model.psi_near_rplus(z) for z in points}
    return {
        "uniform_vs_near": _deviations((z, model.psi_uniform(z), near[z]) for z in points),
        "recursion_vs_near": _deviations((z, _recursion_psi(ctx, z), near[z]) for z in points),
    }


def _coefficient_spread(
    phi: LatticeSolution, f_plus: LatticeSolution, f_minus: LatticeSolution, ks: Sequence[int]
) -> tuple[float, int]:
    """Relative variation of phi's ``(a, b)`` over the ``ks`` where each is resolved, and the skip count.

    A coefficient is resolved at ``k`` when its cancellation factor is at
    most ``MAX_CONDITION``; it needs two resolved samples to take part.
    """
    spreads: list[float] = []
    skipped = 0
    for index in range(2):
        values = []
        for k in ks:
            if coefficient_conditions(phi, f_plus, f_minus, k)[index] > MAX_CONDITION:
                skipped += 1
                continue
            values.append(coefficients(phi, f_plus, f_minus, k)[index])
        if len(values) < 2:
            continue
        reference = values[len(values) // 2]
        if reference == 0:
            spreads.append(float(np.max(np.abs(values))))
        else:
            spreads.append(float(np.max(np.abs(np.asarray(values) - reference))) / abs(reference))
    if not spreads:
        raise IllConditioned(f"neither coefficient of phi is resolved on {phi.line}")
    return max(spreads), skipped


@register(
    "basis_wronskian",
    "Wronskian of lattice f+ and f- on lines spanning the strip, its conservation, and the basis "
    "coefficients of phi where their Wronskians do not cancel.",
    (
        Metric("max_deviation", MetricKind.CONVERGENT, 0.1, "max |w(f+, f-) - 2i|"),
        Metric("drift", MetricKind.EXACT, 1e-8, "relative change of w(f+, f-) along a line"),
        Metric("coefficient_spread", MetricKind.EXACT, 1e-6, "relative variation of phi's resolved (a, b) along a line"),
        Metric("unresolved_fraction", MetricKind.INFO, None, "share of coefficient samples too ill-conditioned to use"),
    ),
)
def basis_wronskian_suite(ctx: SuiteContext) -> dict[str, Measurement]:
    model, problem, h = ctx.model, ctx.problem, ctx.h
    deviations: list[tuple[float, complex]] = []
    drifts: list[float] = []
    spreads: list[float] = []
    skipped = total = 0
    for height in (0.5 * problem.strip.d_y, -0.5 * problem.strip.d_y):
        line = spanning_line(problem, height, h)
        f_plus = solve_f_plus(model, line)
        f_minus = solve_f_minus(model, line)
        k_center = round(-line.theta.real / h)
        deviations.append((abs(wronskian(f_plus, f_minus, k_center) - 2j), line.point(k_center)))
        drifts.append(wronskian_drift(f_plus, f_minus))

        phi = solve_phi(model, line)
        third = line.size // 3
        ks = range(line.k_min + third, line.k_max - third, max(1, third // 4))
        spread, line_skipped = _coefficient_spread(phi, f_plus, f_minus, ks)
        spreads.append(spread)
        skipped += line_skipped
        total += 2 * len(ks)
    worst = max(deviations, key=lambda item: item[0])
    return {
        "max_deviation": Measurement(worst[0], float(np.mean([d for d, _ in deviations])), worst[1]),
        "drift": Measurement(max(drifts)),
        "coefficient_spread": Measurement(max(spreads)),
        "unresolved_fraction": Measurement(skipped / total),
    }


@register(
    "pole_structure",
    "Simple poles of f+ on {h, 2h, 3h}, simple zeros of f- on {0, h, 2h} and simple poles of phi on -{h, 2h, 3h}.",
    (
        Metric("f_plus_poles", MetricKind.EXACT, 0.05, "max extrapolation residual"),
        Metric("f_minus_zeros", MetricKind.EXACT, 0.05, "max extrapolation residual"),
        Metric("phi_poles", MetricKind.EXACT, 0.05, "max extrapolation residual"),
    ),
)
def pole_structure_suite(ctx: SuiteContext) -> dict[str, Measurement]:
    out = {}
    for metric, solution, orders in (
        ("f_plus_poles", "f_plus", (1, 2, 3)),
        ("f_minus_zeros", "f_minus", (0, 1, 2)),
        ("phi_poles", "phi", (1, 2, 3)),
    ):
        records = [residue_extrapolation(ctx.problem, ctx.model, n, ctx.h, solution=solution) for n in orders]
        worst = max(records, key=lambda record: record.residual)
        sign = -1 if solution == "phi" else 1
        out[metric] = Measurement(
            worst.residual, float(np.mean([r.residual for r in records])), complex(sign * worst.n * ctx.h)
        )
    return out


@register(
    "branch_identities",
    "Jump of p and sign flip of sqrt(sin p) across R+, G0 against its alternative form, "
    "and analyticity of p - i ln(-z) and G0 at the pole.",
    (
        Metric("momentum_jump", MetricKind.EXACT, 1e-10, "max |p_up - p - 2 pi| below R+"),
        Metric("root_flip", MetricKind.EXACT, 1e-10, "max |sqrt(sin p_up) + sqrt(sin p)| / |sqrt(sin p)|"),
        Metric("g0_tilde", MetricKind.EXACT, 1e-9, "max |G0 / G0~ - 1|"),
        Metric("g0_contour", MetricKind.EXACT, 1e-8, "negative-order Laurent coefficients of G0"),
        Metric("log_momentum_contour", MetricKind.EXACT, 1e-8, "negative-order coefficients of p - i ln(-z)"),
    ),
)
def branch_identities_suite(ctx: SuiteContext) -> dict[str, Measurement]:
    model, delta = ctx.model, ctx.delta
    branch = model.branch
    xs = np.linspace(delta, 0.8 * ctx.problem.strip.d_x, 10)
    below = [complex(x, y) for x in xs for y in (-delta / 3.0, -2.0 * delta / 3.0)]

    jumps, flips = [], []
    for z in below:
        state, up = branch.state_at(z), branch.state_at(z, upper=True)
        jumps.append(abs(up.p - state.p - 2.0 * math.pi))
        flips.append(abs(up.root + state.root) / abs(state.root))

    angles = np.linspace(0.2, 0.2 + 2.0 * math.pi, 8, endpoint=False)
    disk = [0.5 * delta * complex(math.cos(a), math.sin(a)) for a in angles]
    tilde = _deviations((z, model.g0(z), model.g0_tilde(z)) for z in [*disk, *ctx.samples])

    settings = ctx.problem.settings
    g0_report = contour_coefficients(
        lambda zs: np.array([model.g0(complex(z)).value for z in zs]),
        min(delta, 4.0 * ctx.h),
        settings.contour_points,
    )

    def regularized_momentum(zs: np.ndarray) -> np.ndarray:
        states = [branch.state_at(complex(z)) for z in zs]
        return np.array([s.p - 1j * s.log for s in states])

    radius = min(0.1, 0.5 * min(ctx.problem.strip.d_x, ctx.problem.strip.d_y))
    log_report = contour_coefficients(regularized_momentum, radius, settings.contour_points)

    worst_jump = int(np.argmax(jumps))
    worst_flip = int(np.argmax(flips))
    return {
        "momentum_jump": Measurement(jumps[worst_jump], float(np.mean(jumps)), below[worst_jump]),
        "root_flip": Measurement(flips[worst_flip], float(np.mean(flips)), below[worst_flip]),
        "g0_tilde": tilde,
        "g0_contour": Measurement(g0_report.negative_relative),
        "log_momentum_contour": Measurement(log_report.negative_relative),
    }


def _gamma_samples(count: int, seed: int) -> list[complex]:
    """Points of ``|zeta| < 20`` at distance > 0.1 from the non-positive integers."""
    rng = np.random.default_rng(seed)
    out: list[complex] = []
    while len(out) < count:
        zeta = complex(rng.uniform(-20, 20), rng.uniform(-20, 20))
        n = round(zeta.real)
        if abs(zeta) < 20 and not (n <= 0 and abs(zeta - n) <= 0.1):
            out.append(zeta)
    return out


@register(
    "stirling",
    "Gamma recurrence and reflection residuals, and the sector Stirling error over growing radii.",
    (
        Metric("recurrence_residual", MetricKind.EXACT, 1e-12),
        Metric("reflection_residual", MetricKind.EXACT, 1e-12),
        Metric("error_r10", MetricKind.EXACT, 0.01, "Stirling error at |zeta| = 10"),
        Metric("radius_ratio", MetricKind.EXACT, 1.0, "largest error ratio between consecutive radii"),
        Metric("max_error", MetricKind.INFO, None, "Stirling error at the smallest radius"),
    ),
)
def stirling_suite(ctx: SuiteContext) -> dict[str, Measurement]:
    settings = ctx.problem.settings
    sector = SectorSpec(settings.sector_gap)
    points = _gamma_samples(100, settings.random_seed)
    recurrence = [abs(gamma(z + 1.0) / (z * gamma(z)) - 1.0) for z in points]
    reflected = [
        abs(gamma(z) * gamma(1.0 - z) * np.sin(math.pi * z) / math.pi - 1.0)
        for z in points
        if abs(z - round(z.real)) > 0.1
    ]
    reflected.extend(abs(reflection(z) / gamma(1.0 - z) - 1.0) for z in points[:20] if abs(z - round(z.real)) > 0.1)

    def worst_error(radius: float) -> float:
        return max(stirling_error(radius * np.exp(1j * angle), sector) for angle in settings.stirling_angles)

    radii = sorted(settings.stirling_radii)
    errors = [worst_error(r) for r in radii]
    ratios = [b / a for a, b in zip(errors, errors[1:])]
    return {
        "recurrence_residual": Measurement(max(recurrence)),
        "reflection_residual": Measurement(max(reflected)),
        "error_r10": Measurement(worst_error(10.0)),
        "radius_ratio": Measurement(max(ratios) if ratios else 0.0),
        "max_error": Measurement(errors[0]),
    }


@register(
    "continuation_principle",
    "Recursion psi against the WKB form along the segment Im z = 0.1, |Re z| <= 0.25 of S', where Im p < 0.",
    (
        Metric("max_rel_error", MetricKind.CONVERGENT, 0.25),
        Metric("max_im_momentum", MetricKind.EXACT, 0.0, "largest Im p along the segment"),
    ),
)
def continuation_principle_suite(ctx: SuiteContext) -> dict[str, Measurement]:
    model, problem = ctx.model, ctx.problem
    # narrower strips shrink the segment
    height = min(SEGMENT_HEIGHT, 0.5 * problem.strip.d_y)
    half = min(SEGMENT_HALF_WIDTH, 0.75 * problem.strip.d_x)
    solution = solve_psi(model, line_to(problem, complex(half, height), ctx.h))
    ks = [k for k in range(solution.line.k_min, 1) if solution.line.point(k).real >= -half - 1e-12]
    points = [solution.line.point(k) for k in ks]
    result = _deviations((z, solution.at(k), model.wkb_leading(z)) for k, z in zip(ks, points))

    momenta = model.branch.values_at(points)
    index = int(np.argmax(momenta.imag))
    return {
        "max_rel_error": result,
        "max_im_momentum": Measurement(float(momenta.imag[index]), worst_point=points[index]),
    }
