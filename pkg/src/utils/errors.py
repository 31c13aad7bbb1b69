from typing import Any, Optional


class CbmdLabError(Exception):
    """Base class for every error raised by the laboratory."""


class InvalidMatrix(CbmdLabError, ValueError):
    pass


class InvalidGenerator(InvalidMatrix):
    pass


class InvalidState(CbmdLabError, ValueError):
    pass


class InvalidTolerance(CbmdLabError, ValueError):
    pass


class InvalidKernelParam(CbmdLabError, ValueError):
    pass


class InvalidPole(CbmdLabError, ValueError):
    pass


class InvalidSeries(CbmdLabError, ValueError):
    pass


class InvalidShift(CbmdLabError, ValueError):
    pass


class DegeneratePoints(CbmdLabError, ValueError):
    pass


class NonUnitarySelectTerm(CbmdLabError, ValueError):
    pass


class HypothesisViolation(CbmdLabError, ValueError):
    pass


class ParamTooLarge(CbmdLabError, ValueError):
    pass


class NormTooLarge(CbmdLabError, ValueError):
    pass


class StepTooCoarse(CbmdLabError, ValueError):
    pass


class NumericalFailure(CbmdLabError, ArithmeticError):
    pass


class SampleOnSingularity(NumericalFailure):
    pass


class ToleranceNotMet(CbmdLabError):
    """
    A solve finished but missed its tolerance. The full report rides along so callers
    can still log or tabulate it.
    """

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class MalformedInput(CbmdLabError, ValueError):
    """Input JSON that does not match its schema; `field` names the offending location."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidContour(CbmdLabError, ValueError):
    pass


class InvalidPolynomial(CbmdLabError, ValueError):
    pass
