"""
Error Classes - Custom exception classes for the critical-tori toolkit
Provides structured error reporting with parameter context and config line numbers.
"""

from typing import Any, Dict, List, Optional


class CriticalToriError(Exception):
    """Base class for all critical-tori errors."""

    def __init__(self, message: str, **context: Any):
        self.message = message
        self.context: Dict[str, Any] = context
        super().__init__(self.format_error())

    def format_error(self) -> str:
        """Format error message with the offending parameters."""
        if self.context:
            details = ", ".join(f"{key}={value!r}" for key, value in self.context.items())
            return f"{self.message} [{details}]"
        return self.message


class DomainError(CriticalToriError):
    """Curvature value outside the kappa domain of an energy."""


class ParameterError(CriticalToriError):
    """Parameters violate a constructor's preconditions."""

    def __init__(self, message: str, inequality: str = "", **context: Any):
        self.inequality = inequality
        if inequality:
            message = f"{message} (requires {inequality})"
        super().__init__(message, **context)


class UnsupportedRelation(CriticalToriError):
    """Weingarten relation outside the catalog."""


class NoOscillation(CriticalToriError):
    """First-integral level set has no bounded oscillation interval."""


class QuadratureFailure(CriticalToriError):
    """Turning-point quadrature or shooting did not converge."""


class SingularDenominator(CriticalToriError):
    """Closed-form profile denominator vanishes on the period."""


class IntegrationDiverged(CriticalToriError):
    """Frame integration drifted off the constraint manifold."""


class DegenerateRotation(CriticalToriError):
    """Period map is the identity; no progression axis exists."""


class NoRoot(CriticalToriError):
    """Closure target not bracketed by the scanned d-interval."""


class NotClosed(CriticalToriError):
    """Curve closure gap exceeds tolerance."""


class OffSphere(CriticalToriError):
    """Point does not lie on the expected sphere."""


class ChartSingularity(CriticalToriError):
    """Horizontal-lift chart condition A1 + 1/2 > 0 cannot be met."""


class NotClosedLift(CriticalToriError):
    """Requested number of covers does not close the horizontal lift."""


class ChartExit(CriticalToriError):
    """Base curve leaves the admissible BCV chart."""


class PoorFit(CriticalToriError):
    """Killing-field least-squares fit is inconsistent with the curve."""


class NonPeriodicOrbit(CriticalToriError):
    """Motion generator has incommensurable rotation rates."""


class CurvatureZeroCrossing(CriticalToriError):
    """Analytic principal curvature requested where it is singular."""

    def __init__(self, message: str, numeric: Optional[Any] = None, **context: Any):
        self.numeric = numeric
        super().__init__(message, **context)


class IsoparametricInput(CriticalToriError):
    """Constant-curvature input where a non-constant profile is required."""


class BranchTooShort(CriticalToriError):
    """No monotone curvature branch spans enough samples."""


class AtPole(CriticalToriError):
    """Point coincides with the stereographic projection pole."""


class DegenerateCell(CriticalToriError):
    """Quad cell area below tolerance."""


class ConfigError(CriticalToriError):
    """Error in a pipeline configuration file or flag."""

    def __init__(self, message: str, line: int = 0, column: int = 0, key: str = ""):
        self.line = line
        self.column = column
        self.key = key
        if key:
            message = f"{message} (key: '{key}')"
        super().__init__(message)

    def format_error(self) -> str:
        """Format error message with location information."""
        if self.line > 0:
            if self.column > 0:
                return f"Line {self.line}, Column {self.column}: {self.message}"
            return f"Line {self.line}: {self.message}"
        return self.message


class ArtifactIOError(CriticalToriError):
    """Error related to artifact file I/O."""

    def __init__(self, message: str, filename: str = ""):
        self.filename = filename
        if filename:
            message = f"{message}: {filename}"
        super().__init__(message)


class ConstraintViolation(UserWarning):
    """Closure pair outside the existence range; the search is still attempted."""


def format_error_context(source_lines: List[str], line_num: int, column: int = 0,
                         context_lines: int = 1) -> str:
    """
    Format a config error with the surrounding file lines.

    Args:
        source_lines (list): Lines of the config file
        line_num (int): Line number where error occurred (1-based)
        column (int): Column number where error occurred (1-based)
        context_lines (int): Number of context lines to show before/after

    Returns:
        str: Formatted error context
    """
    if not source_lines or line_num < 1:
        return ""

    error_idx = line_num - 1
    start_idx = max(0, error_idx - context_lines)
    end_idx = min(len(source_lines), error_idx + context_lines + 1)
    width = len(str(end_idx))

    output = []
    for i in range(start_idx, end_idx):
        prefix = f"{i + 1:>{width}}: "
        if i == error_idx:
            output.append(f"> {prefix}{source_lines[i]}")
            if column > 0:
                output.append(" " * (len(prefix) + 2) + " " * (column - 1) + "^")
        else:
            output.append(f"  {prefix}{source_lines[i]}")

    return "\n".join(output)
