"""Exception types shared across the package.

Each class maps onto one failure mode of the numerical kernels, so callers
(and the CLI exit-code mapping) can react without string matching.
"""

from __future__ import annotations


class GeoperiodsError(Exception):
    """Base class for all package-specific errors."""


class DomainError(GeoperiodsError, ValueError):
    """A point, parameter, or curve left the chart domain it must live in."""


class EscapeError(DomainError):
    """A geodesic left a Conformal chart rectangle mid-integration.

    Carries the arc-length parameter at which the trajectory crossed the
    boundary so callers can shrink their request.
    """

    def __init__(self, message: str, exit_parameter: float):
        super().__init__(message)
        self.exit_parameter = float(exit_parameter)


class ConvergenceError(GeoperiodsError, RuntimeError):
    """An iterative solver (shooting, Riccati horizon, Newton) hit its cap."""


class RangeError(GeoperiodsError, ValueError):
    """A scalar argument lies outside its admissible interval."""


class FrequencyGridError(GeoperiodsError, ValueError):
    """Requested Fourier frequency is not an integer multiple of 2*pi/L."""


class UnderflowError(GeoperiodsError, ArithmeticError):
    """A Jacobi solution became too small to divide by."""


class ProximityError(GeoperiodsError, ValueError):
    """Two configuration points are closer than the phase kernels allow."""


class UnsupportedSurfaceError(GeoperiodsError, TypeError):
    """Operation rejects this surface variant (e.g. comparison-only sphere)."""


class ConfigError(GeoperiodsError, ValueError):
    """An experiment configuration failed schema or semantic validation.

    ``pointer`` is a JSON pointer into the offending document.
    """

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer
