"""Exception hierarchy.

Errors fall in two families so the command line driver can map them to exit
codes: ``NumericalError`` (integration, root finding, index counting) and
``InputError`` (malformed data, violated preconditions).
"""
from __future__ import annotations


class MaslovkitError(Exception):
    """Base class for all package errors."""


class NumericalError(MaslovkitError):
    """A numerical procedure failed or produced an untrustworthy result."""


class InputError(MaslovkitError):
    """Input data violates a documented precondition."""


# surface
class ZeroPoint(InputError):
    pass


class OffSurface(InputError):
    pass


class DegenerateGradient(NumericalError):
    pass


# flow
class ToleranceExceeded(NumericalError):
    pass


class StepUnderflow(NumericalError):
    pass


class NotAntiperiodic(InputError):
    pass


# orbits
class NoConvergence(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class NotSymplectic(InputError):
    pass


# index
class UnresolvedCrossing(NumericalError):
    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


class NonIntegerStability(NumericalError):
    pass


class NotSymmetricOrbit(InputError):
    pass


class LimitUnstable(NumericalError):
    pass


class EmptyIntersection(NumericalError):
    pass


# iteration
class NoUnitBlock(InputError):
    pass


class AmbiguousCase(NumericalError):
    pass


class MissingSplittingNumber(InputError):
    pass


# resonance
class InvalidTypeNumbers(InputError):
    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or []


class SignAmbiguous(NumericalError):
    pass


class UnboundedContribution(NumericalError):
    pass


class TruncationTooTight(NumericalError):
    pass
