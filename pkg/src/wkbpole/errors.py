"""Exception hierarchy for wkbpole."""

from __future__ import annotations


class WkbPoleError(Exception):
    """Base class for every error raised by the library."""


# ------------------------------------------------------------------------------
# Domain errors: the request itself is outside the mathematical domain.
# ------------------------------------------------------------------------------
class DomainError(WkbPoleError):
    pass


class PoleHit(DomainError):
    pass


class OutsideStrip(DomainError):
    pass


class TurningPoint(DomainError):
    pass


class AmbiguousBranch(DomainError):
    pass


class OutsideSector(DomainError):
    pass


class OutsideSeedRegion(DomainError):
    pass


class PoleOnLattice(DomainError):
    pass


class PoleOfGamma(DomainError):
    pass


class IntegerArgument(DomainError):
    pass


class PeriodicZero(DomainError):
    pass


class RangeError(DomainError):
    pass


class NotVertical(DomainError):
    pass


class DegenerateBasis(DomainError):
    pass


# ------------------------------------------------------------------------------
# Numerical errors: the request is valid but the numerics gave up.
# ------------------------------------------------------------------------------
class NumericalError(WkbPoleError):
    pass


class NonConvergence(NumericalError):
    pass


class StepCollapse(NumericalError):
    pass


class ExtrapolationUnstable(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class Overflow(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


# ------------------------------------------------------------------------------
# Configuration and report errors.
# ------------------------------------------------------------------------------
class ConfigError(WkbPoleError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    def __init__(self, invariant: str, message: str) -> None:
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class ReportIoError(WkbPoleError):
    pass
