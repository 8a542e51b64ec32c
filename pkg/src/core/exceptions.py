"""Exception hierarchy shared by the services, the CLI and the API"""

from typing import Optional


class LabError(Exception):
    """Base class for laboratory failures"""


class PreconditionError(LabError, ValueError):
    """A documented precondition of an operation was violated"""

    def __init__(self, operation: str, precondition: str, detail: Optional[str] = None):
        self.operation = operation
        self.precondition = precondition
        message = f"{operation}: precondition violated: {precondition}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class FeasibilityError(LabError):
    """Requested computation exceeds the engine's certified range"""


class NumericOverflow(LabError, ArithmeticError):
    """Result exceeds the representable range"""


class QuadratureError(LabError):
    """Adaptive refinement of an inversion integral did not converge"""

    def __init__(self, message: str, estimate: Optional[float] = None, disagreement: Optional[float] = None):
        self.estimate = estimate
        self.disagreement = disagreement
        super().__init__(message)
