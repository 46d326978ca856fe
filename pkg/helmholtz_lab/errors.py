from typing import TYPE_CHECKING, List, Optional

import numpy as np

if TYPE_CHECKING:
    from helmholtz_lab.solver.sweep import SweepReport


class HelmholtzLabError(Exception):
    """Base class for every error raised by `helmholtz_lab`."""


class ConfigError(HelmholtzLabError, ValueError):
    """
    Invalid scenario document or run configuration.

    Args:
        message: human readable description
        line: 1-based line of the offending entry in the document, if known
        column: 1-based column inside the offending value, if known
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column})" if column is not None else ")")
        elif column is not None:
            location = f" (column {column})"
        super().__init__(f"{message}{location}")


class ExpressionSyntaxError(ConfigError):
    """The text of a field expression does not parse."""


class FieldDomainError(HelmholtzLabError, ValueError):
    """A field was evaluated at a point where it is not defined (e.g. `1/r` at the origin)."""


class FieldEvaluationError(HelmholtzLabError, ValueError):
    """A field evaluated to NaN or Inf."""


class ResourceLimitError(HelmholtzLabError, ValueError):
    """The requested grid exceeds the configured node budget."""


class PreconditionError(HelmholtzLabError, ValueError):
    """An operation was called outside of its admissible inputs."""


class RangeError(HelmholtzLabError, ValueError):
    """A point or a region falls outside of the data an operation can use."""


class HypothesisViolationError(HelmholtzLabError, ValueError):
    """A structural hypothesis on the scenario (e.g. n > 0) fails at a sampled point."""


class ConvergenceError(HelmholtzLabError, RuntimeError):
    """
    The Krylov iteration did not reach the requested tolerance.

    Attributes:
        best_iterate: last iterate of the solver (the one with the smallest recorded residual)
        residual_history: relative residual norms recorded by the solver callback
    """

    def __init__(self, message: str, best_iterate: Optional[np.ndarray], residual_history: Optional[List[float]]):
        super().__init__(message)
        self.best_iterate = best_iterate
        self.residual_history = residual_history


class SweepAbortedError(ConvergenceError):
    """
    A fixed-ε step failed during an ε sweep: the solve did not converge, or a field could not be evaluated.
    `partial_report` holds the completed steps.
    """

    def __init__(self, message: str, partial_report: "SweepReport", cause: HelmholtzLabError):
        super().__init__(
            message,
            best_iterate=getattr(cause, "best_iterate", None),
            residual_history=getattr(cause, "residual_history", None),
        )
        self.partial_report = partial_report


class EikonalBreakdownError(HelmholtzLabError, RuntimeError):
    """The radicand of the marching law dropped below the margin (C* too large)."""

    def __init__(self, shell_index: int, radius: float, min_radicand: float):
        self.shell_index = shell_index
        self.radius = radius
        self.min_radicand = min_radicand
        super().__init__(
            f"eikonal breakdown: C* too large (shell {shell_index}, r={radius:.6g}, min radicand {min_radicand:.3e})"
        )


class SteadyStateError(HelmholtzLabError, RuntimeError):
    """The outer shell of an eikonal march has not reached steady state: march further."""
