"""
Exception hierarchy for binoether
Every error carries the process exit code the CLI reports for it
"""

from typing import Optional


class BinoetherError(Exception):
    """Base class for all library and harness errors"""
    exit_code: int = 1


# ========== Harness level ==========

class ConfigValidationError(BinoetherError):
    """Experiment configuration is missing fields or has invalid values"""
    exit_code = 2


class CalibrationError(BinoetherError):
    """No unique sign/normalization convention reproduces the closed forms"""
    exit_code = 2

    def __init__(self, message: str, residuals: Optional[dict] = None):
        super().__init__(message)
        self.residuals = residuals or {}


class CalibrationRequiredError(BinoetherError):
    """A bracket or recurrence was used before its convention was calibrated"""
    exit_code = 2


class DivergenceError(BinoetherError):
    """Integration produced non-finite or blown-up state"""
    exit_code = 3

    def __init__(self, message: str, step: Optional[int] = None, time: Optional[float] = None):
        super().__init__(message)
        self.step = step
        self.time = time


class TodaOverflowError(DivergenceError):
    """Exponent of a Toda interaction term is out of range"""


class ReportIOError(BinoetherError):
    """Report could not be written"""
    exit_code = 4


# ========== Numerical core ==========

class DegeneracyError(BinoetherError):
    """Bivector is singular and cannot be inverted"""

    def __init__(self, message: str, condition_number: float = float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class StructureError(BinoetherError):
    """Recursion operator spectrum does not split into coincident pairs"""


class PreconditionError(BinoetherError):
    """Operation called outside its domain"""


class BoundaryError(BinoetherError):
    """Field has too much mass near the edges of the periodic box"""

    def __init__(self, message: str, tail_fraction: float = 0.0):
        super().__init__(message)
        self.tail_fraction = tail_fraction


class ConjugationSymmetryError(BinoetherError):
    """Complex density integrated to a value with a non-negligible imaginary part"""


class GradientConsistencyError(BinoetherError):
    """Finite-difference and Euler-Lagrange gradients disagree"""
