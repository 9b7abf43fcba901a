"""
Error Hierarchy
===============

Every failure raised by the laboratory derives from ``LabError`` so the CLI
can map them to exit codes in one place:

- ``ConfigError``   -> exit 2 (bad input file)
- any other error   -> exit 3 (solver or verification failure)

Errors that carry diagnostics keep them as attributes instead of burying
them in the message.
"""

from typing import Optional, Tuple


class LabError(Exception):
    """Base class for all laboratory errors."""


# ============================================================================
# DOMAIN ERRORS
# ============================================================================

class DomainError(LabError, ValueError):
    """An argument lies outside the domain of an operation."""


class OutsideConeError(DomainError):
    """An eigenvalue vector is not in the open cone Γ."""


class SamplingError(LabError):
    """Rejection sampling failed to land in the cone."""


class RangeError(DomainError):
    """A level value is not attainable by f."""


class PreconditionError(LabError):
    """A documented precondition of an operation does not hold."""


class GeometryError(LabError):
    """The background metric is not positive definite."""


# ============================================================================
# NUMERICAL ERRORS
# ============================================================================

class NumericalError(LabError):
    """An iterative kernel failed (eigensolver, linear solve, residual check)."""


class NoConvergence(NumericalError):
    """Newton hit its iteration cap."""

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NonAdmissibleStep(NumericalError):
    """Line search could not find an admissible, Armijo-decreasing step."""

    def __init__(self, message: str, step: float = 0.0, residual: float = float("nan")):
        super().__init__(message)
        self.step = step
        self.residual = residual


class ContinuationStuck(NumericalError):
    """The continuity path step fell below its minimum."""

    def __init__(self, message: str, last_t: float = 0.0):
        super().__init__(message)
        self.last_t = last_t


class NoSubsolution(LabError):
    """The cone condition fails: no t makes φ + t·h a strict subsolution."""

    def __init__(self, message: str, worst_node: Optional[Tuple[int, ...]] = None,
                 worst_margin: float = float("-inf")):
        super().__init__(message)
        self.worst_node = worst_node
        self.worst_margin = worst_margin


# ============================================================================
# CONFIGURATION ERRORS
# ============================================================================

class ConfigError(LabError):
    """Configuration text could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# ============================================================================
# VERIFICATION
# ============================================================================

class VerificationFailed(LabError):
    """A property suite or comparison check reported violations."""

    def __init__(self, message: str, violations: int = 0):
        super().__init__(message)
        self.violations = violations
