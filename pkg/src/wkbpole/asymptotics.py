"""Semiclassical formulas for solutions of the difference equation near a simple pole.

Every evaluator returns a :class:`~wkbpole.logspace.LogValue`. Conventions:

* ``p`` is the reference branch (cut along ``R+``, ``Im p < 0`` on ``S'``).
* ``p_up`` is ``p`` continued from above across ``R+``; it is represented by
  the mirrored branch (cut along ``R-``), which also serves the second
  solution ``phi`` built around the anchor ``z1``.
* ``Q(z) = int_0^z (p - i ln(-zeta)) dzeta`` is analytic in the strip and
  carries every action integral through closed forms.
"""

from __future__ import annotations

import cmath
import logging
import math
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from wkbpole.action import ActionCache, log_primitive, regularized_action
from wkbpole.errors import OutsideStrip, PeriodicZero
from wkbpole.logspace import LogValue, log_one_minus_exp
from wkbpole.momentum import MomentumBranch, log_minus, reference_branch
from wkbpole.potential import SpectralProblem
from wkbpole.specfun import log_gamma_one_minus

logger = logging.getLogger(__name__)

LOG_I = 0.5j * math.pi


def log_plus(z: complex) -> complex:
    """Principal ``ln z``; on ``R-`` the limit from above."""
    z = complex(z)
    if z.imag == 0.0 and z.real < 0.0:
        return complex(math.log(-z.real), math.pi)
    return cmath.log(z)


@dataclass
class AsymptoticModel:
    """Branches, actions and normalisations of the asymptotic laws for one ``h``."""

    problem: SpectralProblem
    h: float
    z0: complex
    z1: complex
    branch: MomentumBranch
    mirror: MomentumBranch
    action: ActionCache
    log_n0: complex = 0j
    log_n1: complex = 0j
    _regularized: dict[tuple[complex, str], complex] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def build(
        cls,
        problem: SpectralProblem,
        h: float,
        z0: complex | None = None,
        z1: complex | None = None,
    ) -> AsymptoticModel:
        """Anchor the model at ``z0 < 0`` and ``z1 > 0`` (defaults: ``-+0.7 d_x``)."""
        if h <= 0:
            raise ValueError(f"h must be positive, got {h}")
        d_x = problem.strip.d_x
        z0 = complex(-0.7 * d_x if z0 is None else z0)
        z1 = complex(0.7 * d_x if z1 is None else z1)
        if z0.imag != 0.0 or not -d_x < z0.real < 0.0:
            raise OutsideStrip(f"anchor z0 = {z0} must lie on the negative real axis inside the strip")
        if z1.imag != 0.0 or not 0.0 < z1.real < d_x:
            raise OutsideStrip(f"anchor z1 = {z1} must lie on the positive real axis inside the strip")
        branch = reference_branch(problem)
        mirror = branch.mirrored(z1)
        model = cls(problem, h, z0, z1, branch, mirror, ActionCache(branch, z0))
        model.log_n0 = 1j / h * model.integral_to_pole()
        model.log_n1 = -1j / h * model.integral_up_from_pole(z1)
        logger.debug("model h=%g: log n0 = %s, log n1 = %s", h, model.log_n0, model.log_n1)
        return model

    # --------------------------------------------------------------------------
    # Actions
    # --------------------------------------------------------------------------
    def regularized(self, z: complex, *, mirrored: bool = False) -> complex:
        """``Q(z)``, computed with the reference or the mirrored branch."""
        key = (complex(z), "mirror" if mirrored else "reference")
        with self._lock:
            if key in self._regularized:
                return self._regularized[key]
        value = regularized_action(self.problem, z, branch=self.mirror if mirrored else self.branch)
        with self._lock:
            self._regularized[key] = value
        return value

    def integral_to_pole(self) -> complex:
        """``int_z0^0 p``."""
        return -self.regularized(self.z0) - 1j * log_primitive(self.z0)

    def integral_from_anchor(self, z: complex) -> complex:
        """``int_z0^z p`` through ``Q``; agrees with the action cache off ``R+``."""
        return self.regularized(z) - self.regularized(self.z0) + 1j * (log_primitive(z) - log_primitive(self.z0))

    def integral_up_from_pole(self, z: complex) -> complex:
        """``int_0^z p_up``, the mirrored branch integrated from the pole."""
        z = complex(z)
        if z == 0:
            return 0j
        return self.regularized(z, mirrored=True) + math.pi * z + 1j * (z * log_plus(z) - z)

    # --------------------------------------------------------------------------
    # Pieces
    # --------------------------------------------------------------------------
    def _log_root(self, z: complex) -> complex:
        return cmath.log(self.branch.state_at(z).root)

    def _log_root_up(self, z: complex) -> complex:
        return cmath.log(self.mirror.state_at(z).root)

    def _scale(self, z: complex) -> complex:
        """``(z/h) ln(1/h)``."""
        return complex(z) / self.h * math.log(1.0 / self.h)

    @property
    def _log_prefactor(self) -> float:
        return 0.5 * math.log(self.h / (2.0 * math.pi))

    def _periodic_factor(self, z: complex) -> complex:
        """``ln(1 - exp(2 pi i z / h))``."""
        return log_one_minus_exp(2j * math.pi * complex(z) / self.h)

    # --------------------------------------------------------------------------
    # Laws
    # --------------------------------------------------------------------------
    def wkb_leading(self, z: complex) -> LogValue:
        """``exp((i/h) int_z0^z p) / sqrt(sin p)`` on ``S'``."""
        return LogValue(1j / self.h * self.action.integral(z) - self._log_root(z))

    def g0(self, z: complex) -> LogValue:
        z = complex(z)
        log = (
            self._log_prefactor
            - 0.5 * log_minus(z)
            - self._log_root(z)
            + self._scale(z)
            + 1j / self.h * self.regularized(z)
        )
        return LogValue(log)

    def g0_tilde(self, z: complex) -> LogValue:
        """The form of ``G0`` built on ``sqrt(z)`` and ``p_up``; equal to ``G0`` off ``R-``."""
        z = complex(z)
        log = (
            LOG_I
            + self._log_prefactor
            - 0.5 * log_plus(z)
            - self._log_root_up(z)
            + self._scale(z)
            + 1j / self.h * self.regularized(z, mirrored=True)
        )
        return LogValue(log)

    def g1(self, z: complex) -> LogValue:
        z = complex(z)
        log = (
            self._log_prefactor
            - 0.5 * log_plus(z)
            - self._log_root_up(z)
            - self._scale(z)
            - 1j / self.h * (self.regularized(z, mirrored=True) + math.pi * z)
        )
        return LogValue(log)

    def psi_uniform(self, z: complex) -> LogValue:
        """``Gamma(1 - z/h) G0(z) n0``."""
        return LogValue(log_gamma_one_minus(complex(z) / self.h) + self.g0(z).log + self.log_n0)

    def psi_near_rplus(self, z: complex) -> LogValue:
        """``exp((i/h) int_z0^z p_up) / ((1 - exp(2 pi i z/h)) sqrt(sin p_up))`` near ``R+``."""
        z = complex(z)
        u = 2j * math.pi * z / self.h
        if abs(u.real) < 1.0 and abs(cmath.exp(u) - 1.0) < 1e-12:
            raise PeriodicZero(f"1 - exp(2 pi i z/h) vanishes at z = {z}")
        exponent = 1j / self.h * (self.integral_to_pole() + self.integral_up_from_pole(z))
        return LogValue(exponent - self._periodic_factor(z) - self._log_root_up(z))

    def f_plus(self, z: complex) -> LogValue:
        """``psi / n0``: ``Gamma(1 - z/h) G0(z)``."""
        return LogValue(log_gamma_one_minus(complex(z) / self.h) + self.g0(z).log)

    def f_plus_standard(self, z: complex) -> LogValue:
        """The standard behaviour of ``f+`` on ``S'``: ``exp((i/h) int_0^z p) / sqrt(sin p)``."""
        return LogValue(self.wkb_leading(z).log - self.log_n0)

    def phi_uniform(self, z: complex) -> LogValue:
        """``n1 Gamma(1 + z/h) G1(z)``, the solution with poles on ``-h N``."""
        return LogValue(self.log_n1 + log_gamma_one_minus(-complex(z) / self.h) + self.g1(z).log)

    def phi_standard(self, z: complex) -> LogValue:
        """``n1 exp(-(i/h) int_0^z p_up) / sqrt(sin p_up)``, valid away from ``R-``."""
        return LogValue(self.log_n1 - 1j / self.h * self.integral_up_from_pole(z) - self._log_root_up(z))

    def f_minus(self, z: complex) -> LogValue:
        """``(1/n1) (1 - exp(2 pi i z/h)) phi(z)``; zero on ``h N`` and at 0."""
        z = complex(z)
        periodic = self._periodic_factor(z)
        if math.isinf(periodic.real):
            return LogValue(periodic)
        return LogValue(periodic + log_gamma_one_minus(-z / self.h) + self.g1(z).log)

    def f_minus_standard(self, z: complex) -> LogValue:
        z = complex(z)
        return LogValue(
            self._periodic_factor(z) - 1j / self.h * self.integral_up_from_pole(z) - self._log_root_up(z)
        )

    def log_growth(self, z: complex, *, minus: bool = False) -> float:
        """``ln|exp(+-(i/h) int_0^z p)|`` on ``S'``, the exponential factor of ``f+`` or ``f-``."""
        exponent = 1j / self.h * (self.action.integral(z) - self.integral_to_pole())
        return (-exponent if minus else exponent).real


def wkb_leading(model: AsymptoticModel, z: complex) -> LogValue:
    return model.wkb_leading(z)


def G0_eval(model: AsymptoticModel, z: complex) -> LogValue:  # noqa: N802
    return model.g0(z)


def G1_eval(model: AsymptoticModel, z: complex) -> LogValue:  # noqa: N802
    return model.g1(z)


def psi_uniform(model: AsymptoticModel, z: complex) -> LogValue:
    return model.psi_uniform(z)


def psi_near_Rplus(model: AsymptoticModel, z: complex) -> LogValue:  # noqa: N802
    return model.psi_near_rplus(z)


def f_plus(model: AsymptoticModel, z: complex) -> LogValue:
    return model.f_plus(z)


def f_minus(model: AsymptoticModel, z: complex) -> LogValue:
    return model.f_minus(z)


def g0_tilde_eval(model: AsymptoticModel, z: complex) -> LogValue:
    return model.g0_tilde(z)


@dataclass(frozen=True)
class MaximumPrincipleReport:
    circle_max: float
    interior_max: float
    worst_interior: complex

    @property
    def consistent(self) -> bool:
        return self.interior_max <= self.circle_max

    @property
    def ratio(self) -> float:
        return self.interior_max / self.circle_max if self.circle_max > 0 else math.inf


def maximum_principle(
    func: Callable[[complex], complex],
    radius: float,
    interior: Sequence[complex],
    *,
    points: int = 32,
) -> MaximumPrincipleReport:
    """Compare ``max |func|`` on ``|z| = radius`` with its values at interior points.

    For ``func`` analytic in the disk the interior values cannot exceed the
    boundary maximum; sampling the circle finely enough makes this a check.
    """
    if any(abs(z) >= radius for z in interior):
        raise ValueError("interior points must lie inside the circle")
    angles = 2.0 * math.pi * (np.arange(points) + 0.5) / points
    circle = [abs(func(complex(radius * cmath.exp(1j * a)))) for a in angles]
    inner = [abs(func(complex(z))) for z in interior]
    index = int(np.argmax(inner))
    return MaximumPrincipleReport(max(circle), inner[index], complex(interior[index]))
