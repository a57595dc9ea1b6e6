"""Exceptions raised by the nonneg-sdde library.

Every error derives from ``NonNegSDDEError`` and from the builtin that best
describes it, so callers can catch either.
"""

from typing import Optional


class NonNegSDDEError(Exception):
    """Base class for all library errors"""


class ConstantPolynomialError(NonNegSDDEError, ValueError):
    pass


class UnpairedRootError(NonNegSDDEError, ValueError):
    pass


class DegreeMismatchError(NonNegSDDEError, ValueError):
    pass


class ReductionError(NonNegSDDEError, ArithmeticError):
    pass


class NonCausalError(NonNegSDDEError, ValueError):
    pass


class NonInvertibleError(NonNegSDDEError, ValueError):
    pass


class NonRealZeroError(NonNegSDDEError, ValueError):
    pass


class ConfluentCaseError(NonNegSDDEError, ValueError):
    pass


class DerivativeOrderError(NonNegSDDEError, ValueError):
    pass


class DomainError(NonNegSDDEError, ValueError):
    pass


class OutsideRegimeError(NonNegSDDEError, ValueError):
    pass


class LagResolutionError(NonNegSDDEError, ValueError):
    pass


class ContourResolutionError(NonNegSDDEError, RuntimeError):
    pass


class NonStationaryModelError(NonNegSDDEError, RuntimeError):
    pass


class SingularFrequencyError(NonNegSDDEError, RuntimeError):
    pass


class SpecError(NonNegSDDEError, ValueError):
    """Model-spec schema violation located by a JSON pointer"""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path or ""
        super().__init__(f"{self.path or '/'}: {message}")
