"""Exception types shared across the toolkit.

Every class carries a human-readable message; some attach structured data
(residuals, witness rows) used by the CLI to build reports.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class NonInvertibleSubstitution(ToolkitError):
    """A negative power was requested of an expression that is not a monomial
    times a unit (or, for series, whose order-zero part is not one)."""


class ParameterMismatch(ToolkitError):
    """Two series were combined whose parameter tuples differ."""


class ChartMismatch(ToolkitError):
    """Two chart-level objects over different variable tuples were combined."""


class NegativePowerAtZero(ToolkitError):
    """Evaluation at zero hit a variable with a negative exponent."""


class NotPoissonSubmanifold(ToolkitError):
    """The bracket of the structure with a normal variable does not lie in the
    ideal generated by the normal variables."""


class NonAdaptedTransition(ToolkitError):
    """A transition map does not send normal variables into the ideal of the
    target chart's normal variables (with non-negative powers)."""


class WrongCodimension(ToolkitError):
    """A codimension-one operation was invoked on data of other codimension."""


class UnstableAnsatz(ToolkitError):
    """Raising the degree bound changed a section-space dimension, so no
    stability certificate could be issued."""


class NotInKernel(ToolkitError):
    """A first-order direction fails the kernel conditions of the complex."""


class InconsistentData(ToolkitError):
    """Input data violates a structural precondition (bad atlas, wrong shapes,
    non-matching parameters between problem pieces)."""


class ClosednessViolation(ToolkitError):
    """An internally computed cocycle failed its exact closedness certificate.

    This always indicates a bug in the caller's data pipeline or in the
    toolkit itself, never a legitimate mathematical negative; it is therefore
    raised loudly instead of being folded into a result object."""


class DegreeBoundTooSmall(ToolkitError):
    """An order step was infeasible at the requested polynomial degree bound
    but became feasible at a slightly larger one."""


class InvalidDeformation(ToolkitError):
    """Data handed to the functor engine is not a deformation over the stated
    base (a congruence required by the functor fails)."""


class MatchFailure(ToolkitError):
    """No parameter substitution matches the target family.

    Attributes:
        residual: the mismatch that could not be absorbed (per-chart data).
        reason: short machine-readable tag.
    """

    def __init__(self, message: str, residual=None, reason: str = "no-solution"):
        super().__init__(message)
        self.residual = residual
        self.reason = reason


class ParseError(ToolkitError):
    """Problem-file text could not be parsed or failed semantic validation.

    Attributes:
        line, col: 1-based position of the offending token.
    """

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, column {col}: {message}"
                         if line else message)
        self.line = line
        self.col = col
