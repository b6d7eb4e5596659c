"""Edge statistics of the chiral non-Hermitian Gaussian Dirac ensemble.

Modules: ``specfun`` (special functions and quadrature), ``ensemble``
(sampling and edge scalings), ``kernels_finite`` (finite-n kernel),
``kernels_limit`` (limiting kernels), ``fredholm`` (last-particle laws),
``stats`` (Monte Carlo harness) and ``cli``.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ChiralEdgeError,
    ConfigurationError,
    DiscretizationError,
    DomainError,
    NumericalError,
)

__all__ = [
    "__version__",
    "ChiralEdgeError",
    "ConfigurationError",
    "DiscretizationError",
    "DomainError",
    "NumericalError",
]
