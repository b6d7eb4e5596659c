"""Special functions and quadrature rules used by the kernels.

Airy, Bessel K and erfc are thin wrappers over :mod:`scipy.special` (AMOS and
Cephes) that add domain checks and log-magnitude outputs.  Laguerre
polynomials are evaluated here by their three-term recurrence, including a
rescaled variant that never overflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy import special as sp

from .errors import DomainError

__all__ = [
    "LogComplex",
    "QuadratureRule",
    "airy_ai",
    "airy_ai_prime",
    "log_airy_ai",
    "bessel_k",
    "log_bessel_k",
    "bessel_j",
    "laguerre",
    "laguerre_table",
    "log_laguerre_sequence",
    "erfc",
    "make_rule",
    "composite_gauss_legendre",
    "log_sum_exp_complex",
]


def _wrap_phase(phase: float) -> float:
    """Map an angle to (-pi, pi]."""
    p = math.remainder(phase, 2.0 * math.pi)
    if p <= -math.pi:
        p += 2.0 * math.pi
    return p


@dataclass(frozen=True)
class LogComplex:
    """A complex number stored as ``exp(log_magnitude) * exp(1j * phase)``.

    Zero is represented by ``log_magnitude == -inf`` and phase 0.
    """

    log_magnitude: float
    phase: float = 0.0

    def __post_init__(self):
        if math.isnan(self.log_magnitude) or math.isnan(self.phase):
            raise DomainError("LogComplex fields must not be NaN")
        if math.isinf(self.log_magnitude) and self.log_magnitude > 0:
            raise DomainError("LogComplex magnitude must be finite")
        object.__setattr__(self, "phase", _wrap_phase(float(self.phase)))

    @classmethod
    def from_complex(cls, value: complex) -> "LogComplex":
        value = complex(value)
        if value == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(value)), math.atan2(value.imag, value.real))

    @classmethod
    def from_log(cls, log_value: complex) -> "LogComplex":
        """Build from a complex logarithm ``log|v| + 1j*arg(v)``."""
        log_value = complex(log_value)
        if math.isinf(log_value.real) and log_value.real < 0:
            return cls(-math.inf, 0.0)
        return cls(log_value.real, log_value.imag)

    @property
    def is_zero(self) -> bool:
        return math.isinf(self.log_magnitude)

    @property
    def log(self) -> complex:
        return complex(self.log_magnitude, self.phase)

    def to_complex(self) -> complex:
        """Linear-scale value; underflows to 0 and saturates to inf silently."""
        if self.is_zero:
            return 0j
        if self.log_magnitude > 709.0:
            return complex(math.inf, 0.0) * complex(math.cos(self.phase), math.sin(self.phase))
        return complex(math.exp(self.log_magnitude) * math.cos(self.phase),
                       math.exp(self.log_magnitude) * math.sin(self.phase))

    def __complex__(self) -> complex:
        return self.to_complex()

    @property
    def real(self) -> float:
        return self.to_complex().real

    @property
    def imag(self) -> float:
        return self.to_complex().imag

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        if self.is_zero or other.is_zero:
            return LogComplex(-math.inf, 0.0)
        return LogComplex(self.log_magnitude + other.log_magnitude, self.phase + other.phase)

    __rmul__ = __mul__

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        if other.is_zero:
            raise ZeroDivisionError("division by a zero LogComplex")
        if self.is_zero:
            return self
        return LogComplex(self.log_magnitude - other.log_magnitude, self.phase - other.phase)

    def conjugate(self) -> "LogComplex":
        return LogComplex(self.log_magnitude, -self.phase if not self.is_zero else 0.0)

    def __abs__(self) -> float:
        return 0.0 if self.is_zero else math.exp(self.log_magnitude)


def log_sum_exp_complex(logs: np.ndarray, axis: int | None = None) -> np.ndarray:
    """``log(sum(exp(logs)))`` for complex logarithms, overflow-free.

    Entries with real part ``-inf`` are treated as exact zeros.  An all-zero
    reduction returns ``-inf``.
    """
    logs = np.asarray(logs, dtype=complex)
    re = logs.real
    m = np.max(re, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(invalid="ignore"):
        terms = np.where(np.isneginf(re), 0.0, np.exp(logs - m_safe))
    s = np.sum(terms, axis=axis, keepdims=True)
    with np.errstate(divide="ignore"):
        out = np.log(s) + m_safe
    out = np.where(np.isfinite(m), out, complex(-np.inf, 0.0))
    if axis is None:
        return out.reshape(())[()]
    return np.squeeze(out, axis=axis)


def _check_finite(z, name="argument"):
    arr = np.asarray(z)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {z!r}")


# --------------------------------------------------------------------------
# Airy
# --------------------------------------------------------------------------

def airy_ai(z, log: bool = False):
    """Airy function Ai at real or complex ``z`` (scalar or array).

    With ``log=True`` a scalar input returns a :class:`LogComplex`, which stays
    representable when Ai underflows (large ``z`` in the principal sector).
    """
    _check_finite(z, "z")
    if log:
        if np.ndim(z) != 0:
            raise DomainError("log form is only available for scalar z; use log_airy_ai")
        return LogComplex.from_log(complex(log_airy_ai(complex(z))))
    arr = np.asarray(z)
    ai = sp.airy(arr.astype(complex) if np.iscomplexobj(arr) else arr.astype(float))[0]
    return ai[()] if ai.ndim == 0 else ai


def airy_ai_prime(z):
    """Derivative Ai'(z)."""
    _check_finite(z, "z")
    arr = np.asarray(z)
    aip = sp.airy(arr.astype(complex) if np.iscomplexobj(arr) else arr.astype(float))[1]
    return aip[()] if aip.ndim == 0 else aip


def log_airy_ai(z) -> np.ndarray:
    """Complex logarithm of Ai(z), elementwise; zeros of Ai map to -inf.

    Uses the exponentially scaled Airy function so that the result is exact in
    magnitude far out on the decaying side.
    """
    z = np.asarray(z, dtype=complex)
    eai = sp.airye(z)[0]
    # airye scales by exp(2/3 z^{3/2}) (principal branch) for complex input
    zeta = (2.0 / 3.0) * z * np.sqrt(z)
    with np.errstate(divide="ignore"):
        out = np.log(eai) - zeta
    return out


# --------------------------------------------------------------------------
# Bessel
# --------------------------------------------------------------------------

def log_bessel_k(nu: int, x) -> np.ndarray:
    """Natural log of K_nu(x) for real ``x > 0`` (array friendly)."""
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("K_nu(x) requires finite x > 0")
    return np.log(sp.kve(nu, x)) - x


def bessel_k(nu: int, x: float) -> LogComplex:
    """Modified Bessel function of the second kind, returned in log form."""
    if int(nu) != nu or nu < 0:
        raise DomainError(f"order must be a non-negative integer, got {nu!r}")
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"K_nu(x) requires finite x > 0, got {x!r}")
    return LogComplex(float(log_bessel_k(int(nu), x)), 0.0)


def bessel_j(nu: int, z):
    """Bessel function J_nu at complex argument."""
    _check_finite(z, "z")
    return sp.jv(nu, np.asarray(z, dtype=complex))


# --------------------------------------------------------------------------
# Laguerre
# --------------------------------------------------------------------------

def laguerre_table(jmax: int, nu: float, z) -> np.ndarray:
    """Array ``L[j] = L_j^nu(z)`` for ``j = 0..jmax`` via the degree recurrence."""
    z = np.asarray(z, dtype=complex)
    out = np.empty((jmax + 1,) + z.shape, dtype=complex)
    out[0] = 1.0
    if jmax >= 1:
        out[1] = 1.0 + nu - z
    for j in range(1, jmax):
        out[j + 1] = ((2 * j + 1 + nu - z) * out[j] - (j + nu) * out[j - 1]) / (j + 1)
    return out


def laguerre(j: int, nu: float, z):
    """Generalized Laguerre polynomial L_j^nu(z)."""
    if j < 0:
        raise DomainError("degree must be non-negative")
    val = laguerre_table(j, nu, z)[j]
    return val[()] if np.ndim(val) == 0 else val


def log_laguerre_sequence(kmax: int, nu: float, z) -> Iterator[np.ndarray]:
    """Yield ``log L_k^nu(z)`` for ``k = 0..kmax-1`` without overflow.

    The recurrence carries a running log-scale that is renormalised whenever the
    iterate grows beyond 1e100.
    """
    z = np.asarray(z, dtype=complex)
    p0 = np.ones_like(z)
    scale = np.zeros(z.shape)
    with np.errstate(divide="ignore"):
        if kmax >= 1:
            yield np.log(p0) + scale
        if kmax >= 2:
            p1 = 1.0 + nu - z
            yield np.log(p1) + scale
        else:
            return
        for k in range(1, kmax - 1):
            p2 = ((2 * k + 1 + nu - z) * p1 - (k + nu) * p0) / (k + 1)
            mag = np.abs(p2)
            s = np.where(mag > 1e100, mag, 1.0)
            p0 = p1 / s
            p1 = p2 / s
            scale = scale + np.log(s)
            yield np.log(p1) + scale


# --------------------------------------------------------------------------
# Error function
# --------------------------------------------------------------------------

def erfc(x):
    """Complementary error function for real ``x``."""
    _check_finite(x, "x")
    val = sp.erfc(np.asarray(x, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights with ``integral(f) ~= sum(weights * f(nodes))``."""

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        nodes = np.array(self.nodes)
        weights = np.array(self.weights)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f):
        return np.sum(self.weights * f(self.nodes))


_RULE_KINDS = ("gauss_legendre", "circle_trapezoid", "halfline_exp")


def make_rule(kind: str, order: int, geometry: Sequence[float] | None = None) -> QuadratureRule:
    """Build a quadrature rule.

    kind
        ``gauss_legendre``: geometry ``(a, b)`` (default ``(-1, 1)``).
        ``circle_trapezoid``: geometry ``(center, radius)``; the weights absorb
        ``dz`` so the rule approximates a positively oriented contour integral.
        ``halfline_exp``: geometry ``(start, rate)``; Gauss-Laguerre nodes for
        integrands decaying like ``exp(-rate * (x - start))``.
    """
    if kind not in _RULE_KINDS:
        raise DomainError(f"unknown rule kind {kind!r}; expected one of {_RULE_KINDS}")
    order = int(order)
    if order < 1:
        raise DomainError("order must be >= 1")

    if kind == "gauss_legendre":
        a, b = (-1.0, 1.0) if geometry is None else map(float, geometry)
        if not (math.isfinite(a) and math.isfinite(b)) or not b > a:
            raise DomainError(f"degenerate interval [{a}, {b}]")
        x, w = np.polynomial.legendre.leggauss(order)
        half = 0.5 * (b - a)
        return QuadratureRule(kind, half * x + 0.5 * (a + b), half * w, order)

    if kind == "circle_trapezoid":
        center, radius = (0.0, 1.0) if geometry is None else geometry
        center = complex(center)
        radius = float(radius)
        if not radius > 0:
            raise DomainError("circle radius must be positive")
        e = np.exp(2j * np.pi * np.arange(order) / order)
        return QuadratureRule(kind, center + radius * e, 2j * np.pi * radius * e / order, order)

    start, rate = (0.0, 1.0) if geometry is None else map(float, geometry)
    if not rate > 0:
        raise DomainError("decay rate must be positive")
    x, w = np.polynomial.laguerre.laggauss(order)
    return QuadratureRule(kind, start + x / rate, w * np.exp(x) / rate, order)


def composite_gauss_legendre(edges, order: int) -> QuadratureRule:
    """Gauss-Legendre rule of the given order on each panel ``[edges[i], edges[i+1]]``."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("panel edges must be strictly increasing")
    x, w = np.polynomial.legendre.leggauss(order)
    lo = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return QuadratureRule("gauss_legendre", nodes, weights, order)
