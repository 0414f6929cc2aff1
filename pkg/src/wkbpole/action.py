"""Path integrals of momentum branches and the canonical-curve test."""

from __future__ import annotations

import logging
import math
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from wkbpole.errors import NotVertical, QuadratureFailure
from wkbpole.momentum import (
    BranchTrack,
    ContinuationState,
    MomentumBranch,
    PathPolyline,
    log_minus,
    nearest_momentum,
    reference_branch,
)
from wkbpole.potential import SpectralProblem

logger = logging.getLogger(__name__)

RADIAL_CUTOFF = 1e-3


def log_primitive(z: complex) -> complex:
    """``z ln(-z) - z``, a primitive of ``ln(-z)`` vanishing at 0."""
    z = complex(z)
    if z == 0:
        return 0j
    return z * log_minus(z) - z


def integrate_unit(
    integrand: Callable[[np.ndarray], np.ndarray],
    *,
    abs_tol: float = 1e-11,
    limit: int = 400,
) -> complex:
    """Integrate a complex integrand vectorized in ``t`` over ``[0, 1]`` with ``quad_vec``.

    Raises:
        QuadratureFailure: the tolerance was not met within ``limit``
            subintervals, or the integrand produced non-finite values.
    """

    def scalar(t: float) -> complex:
        return complex(np.asarray(integrand(np.array([t])), dtype=complex)[0])

    value, error, info = integrate.quad_vec(scalar, 0.0, 1.0, epsabs=abs_tol, epsrel=1e-13, limit=limit, full_output=True)
    # status 2: the error estimate sank below the rounding estimate
    if info.status not in (0, 2):
        raise QuadratureFailure(f"{info.message} (error estimate {error:.3e}, {info.neval} evaluations)")
    logger.debug("quadrature converged after %d evaluations (error %.2e)", info.neval, error)
    return complex(value)


def _track_integral(track: BranchTrack, *, regularized: bool) -> complex:
    """``int p`` (or ``int p - i ln(-z)``) along a tracked path, segment by segment."""
    settings = track.problem.settings
    vertices = track.path.vertices
    total = 0j
    s0 = 0.0
    for a, b in zip(vertices, vertices[1:]):
        length = abs(b - a)

        def integrand(t: np.ndarray, s0: float = s0, length: float = length) -> np.ndarray:
            s = s0 + t * length
            p = track.momentum(s)
            if regularized:
                p = p - 1j * track.log_minus(s)
            return p

        value = integrate_unit(
            integrand,
            abs_tol=settings.quad_tolerance / max(length, 1e-300),
            limit=settings.max_subdivisions,
        )
        total += (b - a) * value
        s0 += length
    return total


def integrate_p(branch: MomentumBranch, path: PathPolyline, *, start: ContinuationState | None = None) -> complex:
    """``int p dz`` along ``path`` with ``p`` continued from its value at ``path.start``."""
    return _track_integral(branch.track(path, start), regularized=False)


def _radial_regularized(branch: MomentumBranch, z: complex, state: ContinuationState) -> complex:
    """``int_0^z (p - i ln(-zeta)) dzeta`` along the ray ``zeta = t z``."""
    problem = branch.problem
    settings = problem.settings
    inward = branch.track(PathPolyline((z, RADIAL_CUTOFF * z), branch.continuation_step), state)
    # along the ray ln(-t z) = ln(-z) + ln t exactly
    t_samples = (inward.points / z).real[::-1]
    q_samples = (inward.momenta - 1j * inward.logs)[::-1]

    def integrand(t: np.ndarray) -> np.ndarray:
        log_t = state.log + np.log(t)
        guess = np.interp(t, t_samples, q_samples.real) + 1j * np.interp(t, t_samples, q_samples.imag)
        p = nearest_momentum(problem.w(t * z), guess + 1j * log_t)
        return np.asarray(p) - 1j * log_t

    value = integrate_unit(
        integrand,
        abs_tol=settings.quad_tolerance / abs(z),
        limit=settings.max_subdivisions,
    )
    return z * value


def regularized_action(
    problem: SpectralProblem,
    z: complex,
    path: PathPolyline | None = None,
    *,
    branch: MomentumBranch | None = None,
) -> complex:
    """``int_0^z (p(zeta) - i ln(-zeta)) dzeta``.

    The integrand is analytic in the whole strip, so the result does not
    depend on the path or on which branch supplies ``p`` as long as the
    logarithm is continued together with it. The first leg of ``path`` must
    leave 0 along a straight segment; by default the path is the segment
    ``[0, z]``.
    """
    z = complex(z)
    branch = branch or reference_branch(problem)
    if z == 0:
        return 0j
    if path is None:
        path = PathPolyline((0j, z), branch.continuation_step)
    if path.start != 0 or abs(path.end - z) > 1e-14:
        raise ValueError("the path must run from 0 to z")
    first = path.vertices[1]
    state = branch.state_at(first)
    total = _radial_regularized(branch, first, state)
    if len(path.vertices) > 2:
        rest = PathPolyline(path.vertices[1:], path.max_step)
        total += _track_integral(branch.track(rest, state), regularized=True)
    return total


@dataclass
class ActionCache:
    """Integrals ``int_origin^z p`` along the branch's sheet paths, cached per endpoint."""

    branch: MomentumBranch
    origin: complex
    anchors: dict[tuple[complex, bool], complex] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _from_base(self, z: complex, upper: bool = False) -> complex:
        key = (complex(z), upper)
        with self._lock:
            if key in self.anchors:
                return self.anchors[key]
        if key[0] == self.branch.base_point:
            value = 0j
        else:
            value = integrate_p(self.branch, self.branch.sheet_path(z, upper=upper), start=self.branch.base_state)
        with self._lock:
            self.anchors[key] = value
        return value

    def integral(self, z: complex, *, upper: bool = False) -> complex:
        return self._from_base(z, upper) - self._from_base(self.origin)

    def integrals_along(self, points: Sequence[complex]) -> list[complex]:
        """Integrals at consecutive points, chaining straight segments between them.

        The segments must not cross the branch cut.
        """
        if not points:
            return []
        first = complex(points[0])
        out = [self.integral(first)]
        state = self.branch.state_at(first)
        for a, b in zip(points, points[1:]):
            a, b = complex(a), complex(b)
            track = self.branch.track(PathPolyline((a, b), self.branch.continuation_step), state)
            out.append(out[-1] + _track_integral(track, regularized=False))
            state = track.end
        return out


# ------------------------------------------------------------------------------
# Canonical curves
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class CanonicityReport:
    canonical: bool
    increasing_margin: float  # min over samples of d/dy Im int p
    decreasing_margin: float  # min over samples of -d/dy Im int (p - pi)
    worst_point: complex
    base_point: complex

    def __bool__(self) -> bool:
        return self.canonical


def canonicity(
    curve: PathPolyline,
    branch: MomentumBranch,
    z0: complex,
    *,
    samples_per_segment: int = 16,
    tolerance: float = 1e-12,
) -> CanonicityReport:
    """Check that ``Im int_z0 p`` increases and ``Im int_z0 (p - pi)`` decreases along ``curve``.

    The curve is a polyline traversed upwards; at interior vertices both
    one-sided derivatives are checked. Both margins must exceed ``tolerance``,
    so a curve along which ``Re p`` touches 0 or pi is not canonical.
    """
    vertices = curve.vertices
    for a, b in zip(vertices, vertices[1:]):
        if not b.imag > a.imag:
            raise NotVertical(f"segment {a} -> {b} is not a graph over Im z")

    track = branch.track(curve)
    worst_plus = math.inf
    worst_minus = math.inf
    worst_point = vertices[0]
    s0 = 0.0
    for a, b in zip(vertices, vertices[1:]):
        length = abs(b - a)
        velocity = (b - a) / (b.imag - a.imag)
        s = s0 + np.linspace(0.0, length, samples_per_segment + 1)
        p = track.momentum(s)
        plus = (p * velocity).imag
        minus = -((p - math.pi) * velocity).imag
        slack = np.minimum(plus, minus)
        index = int(np.argmin(slack))
        if slack[index] < min(worst_plus, worst_minus):
            worst_point = complex(track.point(s[index]))
        worst_plus = min(worst_plus, float(plus.min()))
        worst_minus = min(worst_minus, float(minus.min()))
        s0 += length
    canonical = worst_plus > tolerance and worst_minus > tolerance
    return CanonicityReport(canonical, worst_plus, worst_minus, worst_point, complex(z0))
