"""Branches of the complex momentum ``p(z)``, defined by ``2 cos p + w(z) = 0``.

The reference branch lives on the cut strip ``S' = S minus R+`` and has
``Im p < 0`` there. Values anywhere else are obtained by analytic
continuation along explicit polylines ("sheet paths"), tracking at the same
time a square root of ``sin p`` and a branch of ``ln(-z)``.
"""

from __future__ import annotations

import cmath
import enum
import logging
import math
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from wkbpole.errors import (
    AmbiguousBranch,
    ExtrapolationUnstable,
    PoleHit,
    StepCollapse,
    TurningPoint,
)
from wkbpole.logspace import TWO_PI
from wkbpole.potential import SpectralProblem, evaluate

logger = logging.getLogger(__name__)

MAX_JUMP = math.pi / 4
MIN_STEP = 1e-9
TURNING_TOLERANCE = 1e-10


def log_minus(z: complex) -> complex:
    """``ln(-z)`` analytic off ``R+`` with ``ln(1) = 0``; on ``R+`` the limit from above."""
    z = complex(z)
    if z.imag == 0.0 and z.real > 0.0:
        return complex(math.log(z.real), -math.pi)
    return cmath.log(-z)


def sqrt_minus(z: complex) -> complex:
    """``sqrt(-z)`` analytic off ``R+`` with ``sqrt(1) = 1``; on ``R+`` the limit from above."""
    z = complex(z)
    if z.imag == 0.0 and z.real > 0.0:
        return complex(0.0, -math.sqrt(z.real))
    return cmath.sqrt(-z)


def nearest_momentum(w: complex | np.ndarray, guess: complex | np.ndarray) -> complex | np.ndarray:
    """The solution of ``2 cos p + w = 0`` closest to ``guess`` (vectorized)."""
    w = np.asarray(w, dtype=complex)
    guess = np.asarray(guess, dtype=complex)
    base = np.arccos(-w / 2.0)
    best = None
    best_gap = None
    for sign in (1.0, -1.0):
        root = sign * base
        shift = np.round((guess - root).real / TWO_PI)
        candidate = root + TWO_PI * shift
        gap = np.abs(candidate - guess)
        if best is None:
            best, best_gap = candidate, gap
        else:
            take = gap < best_gap
            best = np.where(take, candidate, best)
            best_gap = np.where(take, gap, best_gap)
    assert best is not None
    return complex(best) if best.ndim == 0 else best


def nearest_root(value: complex | np.ndarray, guess: complex | np.ndarray) -> complex | np.ndarray:
    """The square root of ``value`` closest to ``guess`` (vectorized)."""
    root = np.sqrt(np.asarray(value, dtype=complex))
    guess = np.asarray(guess, dtype=complex)
    out = np.where(np.abs(root - guess) <= np.abs(root + guess), root, -root)
    return complex(out) if out.ndim == 0 else out


def nearest_log(z: complex | np.ndarray, guess: complex | np.ndarray) -> complex | np.ndarray:
    """The branch of ``ln(-z)`` closest to ``guess`` (vectorized)."""
    principal = np.log(-np.asarray(z, dtype=complex))
    guess = np.asarray(guess, dtype=complex)
    out = principal + 1j * TWO_PI * np.round((guess - principal).imag / TWO_PI)
    return complex(out) if out.ndim == 0 else out


# ------------------------------------------------------------------------------
# Paths and tracks
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class PathPolyline:
    vertices: tuple[complex, ...]
    max_step: float = 0.01

    def __post_init__(self) -> None:
        if len(self.vertices) < 2:
            raise ValueError("a path needs at least two vertices")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if a == b:
                raise ValueError(f"consecutive vertices coincide at {a}")

    @classmethod
    def through(cls, points: Sequence[complex], max_step: float = 0.01) -> PathPolyline:
        """Build a path, dropping consecutive duplicates."""
        vertices: list[complex] = []
        for point in points:
            point = complex(point)
            if not vertices or abs(point - vertices[-1]) > 1e-15:
                vertices.append(point)
        return cls(tuple(vertices), max_step)

    @property
    def start(self) -> complex:
        return self.vertices[0]

    @property
    def end(self) -> complex:
        return self.vertices[-1]

    @property
    def length(self) -> float:
        return float(sum(abs(b - a) for a, b in zip(self.vertices, self.vertices[1:])))

    def reversed(self) -> PathPolyline:
        return PathPolyline(self.vertices[::-1], self.max_step)

    def __add__(self, other: PathPolyline) -> PathPolyline:
        if abs(self.end - other.start) > 1e-15:
            raise ValueError("paths do not join")
        return PathPolyline(self.vertices + other.vertices[1:], min(self.max_step, other.max_step))


@dataclass(frozen=True)
class ContinuationState:
    """Momentum, square root of ``sin p`` and ``ln(-z)`` at one point."""

    z: complex
    p: complex
    root: complex
    log: complex


@dataclass(frozen=True)
class BranchTrack:
    """Samples of a continued branch along a path, indexed by arclength."""

    problem: SpectralProblem
    path: PathPolyline
    arclength: np.ndarray
    points: np.ndarray
    momenta: np.ndarray
    roots: np.ndarray
    logs: np.ndarray

    @property
    def end(self) -> ContinuationState:
        return ContinuationState(
            complex(self.points[-1]), complex(self.momenta[-1]), complex(self.roots[-1]), complex(self.logs[-1])
        )

    def _interp(self, s: np.ndarray, values: np.ndarray) -> np.ndarray:
        return np.interp(s, self.arclength, values.real) + 1j * np.interp(s, self.arclength, values.imag)

    def point(self, s: np.ndarray) -> np.ndarray:
        return self._interp(np.asarray(s, dtype=float), self.points)

    def momentum(self, s: np.ndarray) -> np.ndarray:
        """Branch values at arclength ``s``, snapped to exact roots."""
        s = np.asarray(s, dtype=float)
        return np.asarray(nearest_momentum(self.problem.w(self.point(s)), self._interp(s, self.momenta)))

    def log_minus(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.asarray(nearest_log(self.point(s), self._interp(s, self.logs)))

    def root(self, s: np.ndarray, momenta: np.ndarray | None = None) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        p = self.momentum(s) if momenta is None else momenta
        return np.asarray(nearest_root(np.sin(p), self._interp(s, self.roots)))


def _advance(
    problem: SpectralProblem, state: ContinuationState, target: complex, max_step: float
) -> list[ContinuationState]:
    """Continue ``state`` along the segment to ``target``; the last state sits exactly on it."""
    guard = problem.pole_guard
    out: list[ContinuationState] = []
    current = state
    step = max_step
    while current.z != target:
        remaining = target - current.z
        distance = abs(remaining)
        halvings = 0
        while True:
            if step >= distance:
                z_new = target
            else:
                z_new = current.z + remaining * (step / distance)
            if abs(z_new) <= guard:
                raise PoleHit(f"continuation path reaches the pole guard at {z_new}")
            p_new = complex(nearest_momentum(complex(problem.w(z_new)), current.p))
            if abs(p_new - current.p) < MAX_JUMP:
                break
            step *= 0.5
            halvings += 1
            if step < MIN_STEP:
                raise StepCollapse(f"continuation step below {MIN_STEP:g} near {current.z}")
        if halvings > 4:
            logger.debug("continuation halved the step %d times near %s", halvings, current.z)
        root = complex(nearest_root(cmath.sin(p_new), current.root))
        log = complex(nearest_log(z_new, current.log))
        current = ContinuationState(z_new, p_new, root, log)
        out.append(current)
        step = min(max_step, 2.0 * step)
    return out


def track_path(problem: SpectralProblem, path: PathPolyline, start: ContinuationState) -> BranchTrack:
    """Continue ``start`` (given at ``path.start``) along every segment of ``path``."""
    if abs(start.z - path.start) > 1e-14:
        raise ValueError(f"start state at {start.z} is not at the path start {path.start}")
    states = [ContinuationState(path.start, start.p, start.root, start.log)]
    for vertex in path.vertices[1:]:
        states.extend(_advance(problem, states[-1], vertex, path.max_step))
    points = np.array([s.z for s in states])
    arclength = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(points)))])
    return BranchTrack(
        problem,
        path,
        arclength,
        points,
        np.array([s.p for s in states]),
        np.array([s.root for s in states]),
        np.array([s.log for s in states]),
    )


# ------------------------------------------------------------------------------
# Branches
# ------------------------------------------------------------------------------
class Cut(enum.Enum):
    POSITIVE = "positive"  # cut along R+, the reference branch
    NEGATIVE = "negative"  # cut along R-, the mirrored branch


@dataclass(frozen=True)
class MomentumBranch:
    problem: SpectralProblem
    base_point: complex
    base_value: complex
    base_root: complex
    base_log: complex
    continuation_step: float = 0.01
    cut: Cut = Cut.POSITIVE
    _cache: dict[tuple[complex, bool], ContinuationState] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    @property
    def base_state(self) -> ContinuationState:
        return ContinuationState(self.base_point, self.base_value, self.base_root, self.base_log)

    def on_cut(self, z: complex) -> bool:
        if z.imag != 0.0:
            return False
        return z.real > 0.0 if self.cut is Cut.POSITIVE else z.real < 0.0

    def sheet_path(self, z: complex, *, upper: bool = False) -> PathPolyline:
        """The polyline from the base point to ``z`` that defines the branch at ``z``.

        Without ``upper`` the path never crosses the cut. With ``upper`` (or
        for points on the cut) it reaches ``z`` from above the real axis.
        """
        z = complex(z)
        strip = self.problem.strip
        side = -0.5 * strip.d_x if self.cut is Cut.POSITIVE else 0.5 * strip.d_x
        b = self.base_point
        if upper or self.on_cut(z):
            eta = 0.5 * strip.d_y
            points = [b, complex(side, b.imag), complex(side, eta), complex(z.real, eta), z]
        else:
            points = [b, complex(side, b.imag), complex(side, z.imag), z]
        return PathPolyline.through(points, self.continuation_step)

    def state_at(self, z: complex, *, upper: bool = False) -> ContinuationState:
        z = complex(z)
        key = (z, upper)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        if z == self.base_point:
            state = self.base_state
        else:
            state = track_path(self.problem, self.sheet_path(z, upper=upper), self.base_state).end
        with self._lock:
            self._cache[key] = state
        return state

    def value_at(self, z: complex, *, upper: bool = False) -> complex:
        return self.state_at(z, upper=upper).p

    def values_at(self, zs: Sequence[complex] | np.ndarray, *, upper: bool = False) -> np.ndarray:
        return np.array([self.value_at(complex(z), upper=upper) for z in np.ravel(zs)]).reshape(np.shape(zs))

    def track(self, path: PathPolyline, start: ContinuationState | None = None) -> BranchTrack:
        """Continue the branch along ``path``; by default it starts from the sheet value at ``path.start``."""
        return track_path(self.problem, path, start or self.state_at(path.start))

    def mirrored(self, anchor: complex) -> MomentumBranch:
        """The branch cut along ``R-`` that coincides with this one above the real axis.

        ``anchor`` must be a positive real point; the mirrored branch starts there
        from the limit of this branch taken from above.
        """
        anchor = complex(anchor)
        if self.cut is not Cut.POSITIVE:
            raise ValueError("only the reference branch can be mirrored")
        if anchor.imag != 0.0 or anchor.real <= 0.0:
            raise ValueError(f"mirror anchor must lie on R+, got {anchor}")
        state = self.state_at(anchor, upper=True)
        return MomentumBranch(
            self.problem, anchor, state.p, state.root, state.log, self.continuation_step, Cut.NEGATIVE
        )


def branch_at(problem: SpectralProblem, z_ref: complex, *, step: float | None = None) -> MomentumBranch:
    """The reference branch: ``Im p < 0`` at ``z_ref`` with ``Re p`` in ``(-pi, pi]``."""
    z_ref = complex(z_ref)
    w = evaluate(problem, z_ref)
    if z_ref.imag == 0.0 and z_ref.real > 0.0:
        raise AmbiguousBranch(f"{z_ref} lies on the cut R+")
    if abs(w - 2.0) < TURNING_TOLERANCE or abs(w + 2.0) < TURNING_TOLERANCE:
        raise TurningPoint(f"w({z_ref}) = {w} is a turning point value")
    if abs(w.imag) <= 1e-14 * max(1.0, abs(w)) and -2.0 <= w.real <= 2.0:
        raise AmbiguousBranch(f"w({z_ref}) = {w} is real in [-2, 2]; Im p vanishes")
    base = cmath.acos(-w / 2.0)
    p = base if base.imag < 0.0 else -base
    re = math.remainder(p.real, TWO_PI)
    if re <= -math.pi + 1e-12:
        re += TWO_PI
    p = complex(re, p.imag)
    return MomentumBranch(
        problem,
        z_ref,
        p,
        cmath.sqrt(cmath.sin(p)),
        cmath.log(-z_ref),
        step if step is not None else problem.settings.continuation_step,
    )


def reference_branch(problem: SpectralProblem) -> MomentumBranch:
    """The reference branch based at ``-d_x/2`` on the negative real axis."""
    return branch_at(problem, complex(-0.5 * problem.strip.d_x, 0.0))


def continue_along(branch: MomentumBranch, path: PathPolyline) -> list[complex]:
    """Momentum values at the continuation samples along ``path``."""
    return [complex(p) for p in branch.track(path).momenta]


def sqrt_sin(branch: MomentumBranch, z: complex, *, upper: bool = False) -> complex:
    """The square root of ``sin p(z)`` continued along with the branch."""
    return branch.state_at(z, upper=upper).root


# ------------------------------------------------------------------------------
# Behaviour at the pole
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class NearPoleDecomposition:
    """``p(z) = i ln z + C + g(z)`` with ``ln z`` analytic off ``R+`` and ``g(0) = 0``."""

    branch: MomentumBranch
    constant: complex
    spread: float

    def g(self, z: complex) -> complex:
        z = complex(z)
        if abs(z) <= self.branch.problem.pole_guard:
            return 0j
        state = self.branch.state_at(z)
        return state.p - 1j * (state.log + 1j * math.pi) - self.constant


def _richardson(samples: Sequence[complex]) -> tuple[complex, complex]:
    """Two-level Richardson on samples at ``t, t/2, t/4`` of ``C + a t + O(t^2)``."""
    f0, f1, f2 = samples
    first = 2.0 * f1 - f0
    second = 2.0 * f2 - f1
    return (4.0 * second - first) / 3.0, second


def decompose_near_pole(
    problem: SpectralProblem,
    branch: MomentumBranch | None = None,
    *,
    direction: complex = 1.0,
    t0: float = 1e-4,
    tolerance: float = 1e-8,
) -> NearPoleDecomposition:
    """Extract ``C`` as the limit of ``p(z) - i ln z`` along the ray ``z = -t * direction``."""
    branch = branch or reference_branch(problem)
    unit = complex(direction) / abs(direction)
    samples = []
    for t in (t0, t0 / 2.0, t0 / 4.0):
        state = branch.state_at(-t * unit)
        samples.append(state.p - 1j * (state.log + 1j * math.pi))
    constant, previous = _richardson(samples)
    spread = abs(constant - previous)
    if spread > tolerance:
        raise ExtrapolationUnstable(f"extrapolants of C differ by {spread:.2e}")
    logger.debug("near-pole constant C = %s (spread %.1e)", constant, spread)
    return NearPoleDecomposition(branch, constant, spread)


# ------------------------------------------------------------------------------
# Contour checks of analyticity
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class ContourReport:
    """Laurent data of a function sampled on a circle.

    ``coefficients[n]`` holds ``c_n * radius**n`` for ``n`` in ``orders``.
    """

    center: complex
    radius: float
    orders: np.ndarray
    coefficients: np.ndarray

    @property
    def negative_relative(self) -> float:
        """Largest negative-order term relative to the largest term."""
        scale = float(np.max(np.abs(self.coefficients)))
        negative = np.abs(self.coefficients[self.orders < 0])
        return float(np.max(negative)) / scale if scale > 0 else 0.0


def contour_coefficients(
    func: Callable[[np.ndarray], np.ndarray],
    radius: float,
    points: int = 128,
    center: complex = 0j,
) -> ContourReport:
    """Laurent coefficients of ``func`` on ``|z - center| = radius`` by FFT.

    Samples sit at half-integer angles so that no node lands on the real axis.
    """
    if points < 4 or points % 2:
        raise ValueError("points must be an even number >= 4")
    theta = TWO_PI * (np.arange(points) + 0.5) / points
    z = center + radius * np.exp(1j * theta)
    values = np.asarray(func(z), dtype=complex)
    spectrum = np.fft.fft(values) / points
    orders = np.fft.fftfreq(points, d=1.0 / points).astype(int)
    # undo the half-step rotation of the sample angles
    coefficients = spectrum * np.exp(-1j * np.pi * orders / points)
    keep = orders > -points // 2
    return ContourReport(complex(center), radius, orders[keep], coefficients[keep])
