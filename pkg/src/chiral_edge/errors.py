"""Exception types shared across the package."""


class ChiralEdgeError(Exception):
    """Base class for all package errors."""


class DomainError(ChiralEdgeError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConfigurationError(ChiralEdgeError, ValueError):
    """A numerical configuration (contour, grid, quadrature) is infeasible."""


class NumericalError(ChiralEdgeError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        return f"{base} ({extra})"


class DiscretizationError(NumericalError):
    """A discretized operator produced values inconsistent with the continuum."""
