"""Complex Gamma function, its sector Stirling form and the reflection identity.

Everything that feeds the asymptotic laws is also available as a logarithm,
since ``Gamma(1 - z/h)`` over- or underflows long before ``h`` gets small.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from wkbpole.errors import IntegerArgument, OutsideSector, PoleOfGamma
from wkbpole.logspace import log_of

INTEGER_TOLERANCE = 1e-12
_LOG_PI = math.log(math.pi)
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SectorSpec:
    """The sector ``|arg zeta| <= pi - epsilon``."""

    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < math.pi:
            raise ValueError(f"sector gap must lie in (0, pi), got {self.epsilon}")

    def contains(self, zeta: complex) -> bool:
        return abs(cmath.phase(complex(zeta))) <= math.pi - self.epsilon


def _nearest_integer(zeta: complex) -> int | None:
    n = round(zeta.real)
    if abs(zeta - n) < INTEGER_TOLERANCE:
        return int(n)
    return None


def gamma(zeta: complex) -> complex:
    zeta = complex(zeta)
    n = _nearest_integer(zeta)
    if n is not None and n <= 0:
        raise PoleOfGamma(f"Gamma has a pole at {n}")
    return complex(special.gamma(zeta))


def log_gamma(zeta: complex) -> complex:
    """Principal branch of ``log Gamma``."""
    zeta = complex(zeta)
    n = _nearest_integer(zeta)
    if n is not None and n <= 0:
        raise PoleOfGamma(f"Gamma has a pole at {n}")
    return complex(special.loggamma(zeta))


def log_sin_pi(zeta: complex) -> complex:
    """A logarithm of ``sin(pi zeta)`` that stays finite for large ``|Im zeta|``."""
    zeta = complex(zeta)
    if zeta.imag > 1.0:
        # sin(pi z) = (i/2) e^{-i pi z} (1 - e^{2 pi i z})
        return -1j * math.pi * zeta + complex(np.log1p(-cmath.exp(2j * math.pi * zeta))) + cmath.log(0.5j)
    if zeta.imag < -1.0:
        return 1j * math.pi * zeta + complex(np.log1p(-cmath.exp(-2j * math.pi * zeta))) + cmath.log(-0.5j)
    return log_of(cmath.sin(math.pi * zeta))


def reflection(zeta: complex) -> complex:
    """``Gamma(1 - zeta) = pi / (sin(pi zeta) Gamma(zeta))``.

    This is the route used for ``Gamma(1 - z/h)`` when ``Re z > 0``, where the
    direct argument has a large negative real part.
    """
    zeta = complex(zeta)
    if _nearest_integer(zeta) is not None:
        raise IntegerArgument(f"reflection is singular at the integer {zeta}")
    return math.pi / (cmath.sin(math.pi * zeta) * complex(special.gamma(zeta)))


def log_gamma_one_minus(zeta: complex) -> complex:
    """A logarithm of ``Gamma(1 - zeta)``, reflected when ``Re zeta > 1/2``."""
    zeta = complex(zeta)
    n = _nearest_integer(zeta)
    if n is not None and n >= 1:
        raise PoleOfGamma(f"Gamma(1 - zeta) has a pole at zeta = {n}")
    if zeta.real > 0.5:
        return _LOG_PI - log_sin_pi(zeta) - complex(special.loggamma(zeta))
    return complex(special.loggamma(1.0 - zeta))


def log_stirling(zeta: complex) -> complex:
    """Logarithm of ``sqrt(2 pi zeta) exp(zeta (ln zeta - 1))`` with principal branches."""
    zeta = complex(zeta)
    log_zeta = cmath.log(zeta)
    return _HALF_LOG_TWO_PI + 0.5 * log_zeta + zeta * (log_zeta - 1.0)


def stirling_sector(zeta: complex, sector: SectorSpec) -> complex:
    """Leading Stirling term for ``Gamma(1 + zeta)`` inside ``sector``."""
    zeta = complex(zeta)
    if zeta == 0 or not sector.contains(zeta):
        raise OutsideSector(f"arg {zeta} is outside |arg| <= pi - {sector.epsilon}")
    return cmath.exp(log_stirling(zeta))


def stirling_error(zeta: complex, sector: SectorSpec) -> float:
    """Relative error of the Stirling term against ``Gamma(1 + zeta)``, computed in logs."""
    zeta = complex(zeta)
    if zeta == 0 or not sector.contains(zeta):
        raise OutsideSector(f"arg {zeta} is outside |arg| <= pi - {sector.epsilon}")
    delta = log_stirling(zeta) - log_gamma(1.0 + zeta)
    return abs(cmath.exp(delta) - 1.0)
