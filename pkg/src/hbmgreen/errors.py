"""Exception hierarchy.  Every error raised on purpose derives from HbmError."""


class HbmError(Exception):
    pass


class DomainError(HbmError, ValueError):
    """An input lies outside the domain of the requested operation."""


class OrderOutOfRange(DomainError):
    pass


class NonPositiveArgument(DomainError):
    pass


class ArgumentOrderViolated(DomainError):
    pass


class ExponentOutOfRange(DomainError):
    pass


class DimensionMismatch(DomainError):
    pass


class DimensionTooLow(DomainError):
    pass


class BelowBarrier(DomainError):
    pass


class DiagonalSingularity(DomainError):
    pass


class BarrierNotUnit(DomainError):
    pass


class DomainMismatch(DomainError):
    """A transform was paired with an inversion method it cannot serve."""


class NumericalError(HbmError, ArithmeticError):
    pass


class InversionUnstable(NumericalError):
    pass


class QuadratureNonConvergent(NumericalError):
    pass


class ConvolutionGridTooCoarse(NumericalError):
    pass


class NegativeDensityBeyondTolerance(NumericalError):
    pass


class StepTooCoarse(NumericalError):
    pass


class SpecParseError(HbmError, ValueError):
    pass


class UnknownSuite(HbmError, KeyError):
    pass
