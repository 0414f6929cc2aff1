"""Complex values carried as logarithms.

Solutions of the difference equation grow like exp(c/h); for small h their
raw values leave the double range long before the comparisons we care about
lose meaning. Every such quantity is therefore kept as a complex logarithm
``log`` with ``exp(log)`` equal to the value; the imaginary part is only
meaningful modulo 2*pi.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_phase(phase: float) -> float:
    """Map a phase into (-pi, pi]."""
    wrapped = math.remainder(phase, TWO_PI)
    return math.pi if wrapped == -math.pi else wrapped


def log_of(value: complex) -> complex:
    """Complex logarithm that maps zero to -inf instead of raising."""
    if value == 0:
        return complex(-math.inf, 0.0)
    return cmath.log(value)


def log_one_minus_exp(u: complex) -> complex:
    """A logarithm of ``1 - exp(u)`` that stays finite for large ``Re u``."""
    if u.real > 0.0:
        # 1 - e^u = -e^u (1 - e^-u)
        return u + complex(0.0, math.pi) + log_of(-np.expm1(-u))
    return log_of(-complex(np.expm1(u)))


@dataclass(frozen=True)
class LogValue:
    """A complex number stored as its logarithm."""

    log: complex

    @classmethod
    def of(cls, value: complex) -> LogValue:
        return cls(log_of(complex(value)))

    @property
    def log_magnitude(self) -> float:
        return self.log.real

    @property
    def phase(self) -> float:
        return wrap_phase(self.log.imag)

    @property
    def value(self) -> complex:
        """The raw value; overflows to inf for very large magnitudes."""
        with np.errstate(over="ignore"):
            return complex(np.exp(self.log))

    def ratio_to(self, other: LogValue) -> complex:
        """``self / other`` computed without forming either value."""
        return complex(np.exp(self.log - other.log))

    def relative_deviation(self, reference: LogValue) -> float:
        """``|self / reference - 1|``."""
        return abs(self.ratio_to(reference) - 1.0)

    def log_deviation(self, reference: LogValue) -> float:
        """Distance of the logarithms with the phase compared modulo 2*pi."""
        delta = self.log - reference.log
        return abs(complex(delta.real, wrap_phase(delta.imag)))

    def __mul__(self, other: LogValue) -> LogValue:
        return LogValue(self.log + other.log)

    def __truediv__(self, other: LogValue) -> LogValue:
        return LogValue(self.log - other.log)
