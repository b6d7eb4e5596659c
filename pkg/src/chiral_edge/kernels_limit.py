"""Limiting edge, bulk and hard-edge kernels.

The interpolating Airy kernel has two representations: a single half-line
integral of Airy products and a double integral over the shifted lines
R + i delta.  Both are evaluated here on batches of points, in log form, so
that the factor exp(sigma^6/6) of the half-line form never overflows.

"Hat" kernels use the imaginary-part scaling b_n = a_n; the unhatted kernel
uses b_n = sigma a_n and is the one whose Fredholm determinant gives the
last-particle law.  They are related by
``K(xi1 + i eta1, xi2 + i eta2) = sigma * hatK(xi1 + i sigma eta1, xi2 + i sigma eta2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .specfun import (
    LogComplex,
    QuadratureRule,
    airy_ai,
    airy_ai_prime,
    bessel_j,
    composite_gauss_legendre,
    erfc,
    log_airy_ai,
    log_bessel_k,
)

__all__ = [
    "SigmaParam",
    "HatKernelValue",
    "halfline_rule",
    "interp_airy_log_factors",
    "interp_airy_matrix_real",
    "interp_airy_matrix_contour",
    "kernel_airy_interp_real",
    "kernel_airy_interp_contour",
    "kernel_airy_interp",
    "kernel_airy",
    "kernel_sine_interp",
    "kernel_sine",
    "kernel_bessel_interp",
    "kernel_bessel",
    "density_erfc",
    "density_interp_large_sigma",
]

_LOG_RANGE = 40.0  # natural-log headroom kept by truncations (about 1e-17)
DEFAULT_DELTA = 0.5


@dataclass(frozen=True)
class SigmaParam:
    sigma: float
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DomainError("sigma must be non-negative")
        if not self.delta > 0:
            raise DomainError("delta must be positive")


@dataclass(frozen=True)
class HatKernelValue:
    value: LogComplex
    representation: str

    def to_complex(self) -> complex:
        return self.value.to_complex()

    def __complex__(self):
        return self.to_complex()


def _as_points(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if not np.all(np.isfinite(z)):
        raise DomainError("kernel arguments must be finite")
    return z


# --------------------------------------------------------------------------
# half-line (real integral) representation
# --------------------------------------------------------------------------

def halfline_rule(shifts: np.ndarray, sigma: float, order: int = 20,
                  panel: float = 1.0) -> QuadratureRule:
    """Rule on [0, T] for t -> exp(sigma^2 t) Ai(w + t) Ai(conj(w) + t).

    T is the smallest grid point past which the log-integrand has fallen
    _LOG_RANGE below its maximum for every shift ``w`` in ``shifts``.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=complex))
    # representative subset keeps the scan cheap for big node sets
    re_sorted = np.argsort(shifts.real)
    pick = np.unique(np.concatenate([re_sorted[:8], re_sorted[-8:],
                                     np.argsort(np.abs(shifts.imag))[-8:]]))
    w = shifts[pick]
    t_max = 40.0 + 20.0 * sigma + 4.0 * max(0.0, -w.real.min())
    t = np.arange(0.0, t_max, 0.25)
    logi = sigma * sigma * t[None, :] + 2.0 * log_airy_ai(w[:, None] + t[None, :]).real
    peak = np.max(logi, axis=1, keepdims=True)
    below = logi < peak - 2.0 * _LOG_RANGE
    past_peak = t[None, :] > t[np.argmax(logi, axis=1)][:, None]
    ok = below & past_peak
    cut = np.where(ok.any(axis=1), t[np.argmax(ok, axis=1)], np.nan)
    if np.any(np.isnan(cut)):
        raise NumericalError("half-line truncation not reached", sigma=sigma, t_max=t_max)
    T = max(float(np.max(cut)), 8.0)
    n_panels = int(math.ceil(T / panel))
    return composite_gauss_legendre(np.linspace(0.0, n_panels * panel, n_panels + 1), order)


def interp_airy_log_factors(zeta, sigma: float, hat: bool, rule: QuadratureRule | None = None):
    """Per-point log prefactors and log half-line factors.

    Returns ``(pre, L, rule)`` with ``pre`` of shape (N,) and ``L`` of shape
    (N, T) such that kernel(z_i, z_j) = exp(pre_i + conj(pre_j)) *
    sum_t exp(L_it + conj(L_jt)) / (c sqrt(pi)), with c = sigma for the hat
    kernel and c = 1 otherwise.
    """
    z = _as_points(zeta)
    s2 = sigma * sigma
    if hat:
        if not sigma > 0:
            raise DomainError("the hat kernel needs sigma > 0; use kernel_airy_interp at sigma = 0")
        zt = z
        gauss = -z.imag ** 2 / (2.0 * s2)
    else:
        zt = z.real + 1j * sigma * z.imag
        gauss = -0.5 * z.imag ** 2
    shift = zt + s2 * s2 / 4.0
    if rule is None:
        rule = halfline_rule(shift, sigma)
    t, wt = rule.nodes, rule.weights
    pre = s2 ** 3 / 12.0 + gauss + 0.5 * s2 * zt
    L = 0.5 * s2 * t[None, :] + log_airy_ai(shift[:, None] + t[None, :]) + 0.5 * np.log(wt)[None, :]
    return pre, L, rule


def _gram_log(pre1, L1, pre2, L2, log_norm):
    m1 = L1.real.max(axis=1)
    m2 = L2.real.max(axis=1)
    with np.errstate(under="ignore"):
        E1 = np.exp(L1 - m1[:, None])
        E2 = np.exp(L2 - m2[:, None])
    S = E1 @ E2.conj().T
    with np.errstate(divide="ignore"):
        return (pre1 + m1)[:, None] + np.conj(pre2 + m2)[None, :] + np.log(S) - log_norm


def interp_airy_matrix_real(zeta1, zeta2, sigma: float, hat: bool = True) -> np.ndarray:
    """Complex log of the kernel matrix [K(z1_i, z2_j)] from the half-line form."""
    z1, z2 = _as_points(zeta1), _as_points(zeta2)
    if hat and not sigma > 0:
        raise DomainError("the hat kernel needs sigma > 0")
    if not sigma >= 0:
        raise DomainError("sigma must be non-negative")
    both = np.concatenate([z1, z2])
    pre, L, _ = interp_airy_log_factors(both, sigma, hat)
    log_norm = 0.5 * math.log(math.pi) + (math.log(sigma) if hat else 0.0)
    n1 = len(z1)
    return _gram_log(pre[:n1], L[:n1], pre[n1:], L[n1:], log_norm)


def _log_interp_diag(zeta, sigma: float, hat: bool) -> np.ndarray:
    z = _as_points(zeta)
    pre, L, _ = interp_airy_log_factors(z, sigma, hat)
    two = 2.0 * L.real
    m = two.max(axis=1)
    s = np.log(np.sum(np.exp(two - m[:, None]), axis=1))
    log_norm = 0.5 * math.log(math.pi) + (math.log(sigma) if hat else 0.0)
    return 2.0 * pre.real + m + s - log_norm


# --------------------------------------------------------------------------
# double integral over R + i delta
# --------------------------------------------------------------------------

def _line_exponent(x, delta, zeta, sigma, hat, conj):
    u = x + 1j * delta
    if hat:
        zz = np.conj(zeta) if conj else zeta
        return -0.5 * sigma ** 2 * u * u + 1j * u ** 3 / 3.0 + 1j * zz * u
    sgn = -1.0 if conj else 1.0
    return -0.5 * (sigma * u + sgn * zeta.imag) ** 2 + 1j * u ** 3 / 3.0 + 1j * zeta.real * u


def _line_rule(z1, z2, sigma, delta, hat, order):
    x = np.arange(-60.0, 60.0, 0.05)
    r1 = _line_exponent(x[None, :], delta, z1[:, None], sigma, hat, False).real
    r2 = _line_exponent(x[None, :], delta, z2[:, None], sigma, hat, True).real
    keep = np.concatenate([r1 - r1.max(axis=1, keepdims=True),
                           r2 - r2.max(axis=1, keepdims=True)]) > -_LOG_RANGE
    span = x[keep.any(axis=0)]
    lo, hi = span.min() - 0.5, span.max() + 0.5
    if lo <= x[0] or hi >= x[-1]:
        raise NumericalError("line truncation exceeded the scan window", sigma=sigma, delta=delta)
    xi_max = float(np.max(np.abs(np.concatenate([z1.real, z2.real])))) + 1.0
    # oscillation rate of exp(i u^3/3 + i xi u) is about x^2 + |xi|
    edges = [0.0]
    while edges[-1] < max(hi, -lo):
        xc = edges[-1]
        edges.append(xc + min(1.0, 4.0 * delta, 6.0 / (xc * xc + xi_max)))
    pos = np.array(edges)
    full = np.concatenate([-pos[:0:-1], pos])
    full = full[(full >= lo - 1.0) & (full <= hi + 1.0)]
    return composite_gauss_legendre(full, order)


def interp_airy_matrix_contour(zeta1, zeta2, sigma: float, delta: float = DEFAULT_DELTA,
                               hat: bool = True, order: int = 24) -> np.ndarray:
    """Complex log of [K(z1_i, z2_j)] from the double integral over R + i delta."""
    z1, z2 = _as_points(zeta1), _as_points(zeta2)
    if not delta > 0:
        raise DomainError("delta must be positive so that u + v stays away from 0")
    if hat and not sigma > 0:
        raise DomainError("the hat kernel needs sigma > 0")
    if not sigma >= 0:
        raise DomainError("sigma must be non-negative")
    rule = _line_rule(z1, z2, sigma, delta, hat, order)
    x, w = rule.nodes, rule.weights
    u = x + 1j * delta
    f1 = _line_exponent(x[None, :], delta, z1[:, None], sigma, hat, False) + np.log(w)[None, :]
    f2 = _line_exponent(x[None, :], delta, z2[:, None], sigma, hat, True) + np.log(w)[None, :]
    m1 = f1.real.max(axis=1)
    m2 = f2.real.max(axis=1)
    E1 = np.exp(f1 - m1[:, None])
    E2 = np.exp(f2 - m2[:, None])
    # int_0^inf e^{it(u+v)} dt = i/(u+v) for Im(u+v) > 0
    C = 1j / (u[:, None] + u[None, :])
    S = E1 @ C @ E2.T
    log_pre = -math.log(4.0) - 2.5 * math.log(math.pi)
    if hat:
        log_pre = log_pre - math.log(sigma)
        gauss = -(z1.imag ** 2)[:, None] / (2 * sigma ** 2) - (z2.imag ** 2)[None, :] / (2 * sigma ** 2)
    else:
        gauss = 0.0
    with np.errstate(divide="ignore"):
        return log_pre + gauss + m1[:, None] + m2[None, :] + np.log(S)


def kernel_airy_interp_real(zeta1: complex, zeta2: complex, sigma: float) -> HatKernelValue:
    """Hat interpolating Airy kernel from the half-line Airy-product integral."""
    if not sigma > 0:
        raise DomainError("sigma must be > 0 for the hat kernel; "
                          "use kernel_airy_interp(..., sigma=0) for the sigma -> 0 limit")
    lv = interp_airy_matrix_real([zeta1], [zeta2], sigma, hat=True)[0, 0]
    return HatKernelValue(LogComplex.from_log(complex(lv)), "real_integral")


def kernel_airy_interp_contour(zeta1: complex, zeta2: complex, sigma: float,
                               delta: float = DEFAULT_DELTA, hat: bool = True) -> HatKernelValue:
    """Interpolating Airy kernel from the double line integral.

    ``hat=False`` evaluates the unhatted kernel, which is also defined at sigma = 0.
    """
    lv = interp_airy_matrix_contour([zeta1], [zeta2], sigma, delta, hat)[0, 0]
    return HatKernelValue(LogComplex.from_log(complex(lv)), "double_contour")


def kernel_airy_interp(zeta1, zeta2, sigma: float) -> np.ndarray:
    """Unhatted interpolating Airy kernel K_sigma, elementwise, linear scale."""
    z1, z2 = np.broadcast_arrays(np.asarray(zeta1, dtype=complex), np.asarray(zeta2, dtype=complex))
    flat1, flat2 = z1.ravel(), z2.ravel()
    both = np.concatenate([flat1, flat2])
    pre, L, _ = interp_airy_log_factors(both, sigma, hat=False)
    n = len(flat1)
    terms = L[:n] + np.conj(L[n:])
    m = terms.real.max(axis=1)
    s = np.sum(np.exp(terms - m[:, None]), axis=1)
    out = np.exp(pre[:n] + np.conj(pre[n:]) + m - 0.5 * math.log(math.pi)) * s
    return out.reshape(z1.shape)[()] if z1.ndim == 0 else out.reshape(z1.shape)


# --------------------------------------------------------------------------
# classical kernels and their deformations
# --------------------------------------------------------------------------

def kernel_airy(xi1, xi2, method: str = "closed"):
    """Airy kernel int_0^inf Ai(xi1+t) Ai(xi2+t) dt.

    ``closed`` uses (Ai(x)Ai'(y) - Ai'(x)Ai(y))/(x - y), switching to the
    diagonal value Ai'(m)^2 - m Ai(m)^2 at the midpoint when |x - y| < 5e-6.
    ``quad`` integrates the product directly.
    """
    x, y = np.broadcast_arrays(np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float))
    if method == "quad":
        rule = halfline_rule(np.concatenate([x.ravel(), y.ravel()]).astype(complex), 0.0)
        t, w = rule.nodes, rule.weights
        vals = (airy_ai(x.ravel()[:, None] + t[None, :]) * airy_ai(y.ravel()[:, None] + t[None, :])) @ w
        vals = vals.reshape(x.shape)
        return float(vals) if vals.ndim == 0 else vals
    if method != "closed":
        raise DomainError(f"unknown method {method!r}")
    ax, apx = airy_ai(x), airy_ai_prime(x)
    ay, apy = airy_ai(y), airy_ai_prime(y)
    d = x - y
    near = np.abs(d) < 5e-6
    mid = 0.5 * (x + y)
    am, apm = airy_ai(mid), airy_ai_prime(mid)
    diag = apm * apm - mid * am * am
    with np.errstate(invalid="ignore", divide="ignore"):
        off = (ax * apy - apx * ay) / d
    out = np.where(near, diag, off)
    return float(out) if out.ndim == 0 else out


def _gl01(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def kernel_sine_interp(zeta1, zeta2, sigma_hat: float, order: int = 64):
    """Weakly non-Hermitian sine kernel (bulk), Hermitian form.

    The cosine is taken at ``zeta1 - conj(zeta2)``, which makes the kernel
    Hermitian with a positive diagonal.
    """
    if not sigma_hat > 0:
        raise DomainError("sigma_hat must be positive")
    z1, z2 = np.broadcast_arrays(np.asarray(zeta1, dtype=complex), np.asarray(zeta2, dtype=complex))
    t, w = _gl01(order)
    arg = (z1 - np.conj(z2))[..., None] * t
    integral = np.sum(w * np.exp(-(t * sigma_hat) ** 2) * np.cos(arg), axis=-1)
    pre = np.exp(-(z1.imag ** 2 + z2.imag ** 2) / (2 * sigma_hat ** 2)) / (sigma_hat * math.pi ** 1.5)
    out = pre * integral
    return complex(out) if out.ndim == 0 else out


def kernel_sine(xi1, xi2):
    """Sine kernel sin(pi(x-y))/(pi(x-y))."""
    return np.sinc(np.asarray(xi1, dtype=float) - np.asarray(xi2, dtype=float))


def kernel_bessel_interp(zeta1, zeta2, sigma_hat: float, nu: int, order: int | None = None):
    """Weakly non-Hermitian Bessel kernel (hard edge), Hermitian form.

    The second Bessel factor is evaluated at ``t conj(zeta2)``; together with
    the ``(zeta1 conj(zeta2))^nu`` denominator this gives a Hermitian kernel.
    """
    if not sigma_hat > 0:
        raise DomainError("sigma_hat must be positive")
    z1, z2 = np.broadcast_arrays(np.asarray(zeta1, dtype=complex), np.asarray(zeta2, dtype=complex))
    if np.any(z1 == 0) or np.any(z2 == 0):
        raise DomainError("the Bessel kernel is undefined at zeta = 0")
    if order is None:
        order = int(64 + 4 * max(np.abs(z1).max(), np.abs(z2).max()))
    t, w = _gl01(order)
    j1 = bessel_j(nu, z1[..., None] * t)
    j2 = bessel_j(nu, np.conj(z2)[..., None] * t)
    integral = np.sum(w * t * np.exp(-2.0 * (t * sigma_hat) ** 2) * j1 * j2, axis=-1)
    s2 = sigma_hat ** 2
    a1, a2 = np.abs(z1), np.abs(z2)
    log_pre = ((nu + 1) * (np.log(a1) + np.log(a2)) - math.log(2 * math.pi * s2)
               - nu * (np.log(z1) + np.log(np.conj(z2)))
               + 0.5 * (log_bessel_k(nu, a1 ** 2 / (4 * s2)) + log_bessel_k(nu, a2 ** 2 / (4 * s2)))
               + (z1.real ** 2 + z2.real ** 2) / (8 * s2))
    out = np.exp(log_pre) * integral
    return complex(out) if out.ndim == 0 else out


def kernel_bessel(xi1, xi2, nu: int):
    """Hermitian Bessel kernel sqrt|xy| int_0^1 t J_nu(tx) J_nu(ty) dt (positive diagonal)."""
    from scipy.special import jv
    x, y = np.broadcast_arrays(np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float))
    near = np.abs(x * x - y * y) < 1e-9 * np.maximum(1.0, x * x)
    with np.errstate(invalid="ignore", divide="ignore"):
        off = (x * jv(nu + 1, x) * jv(nu, y) - y * jv(nu + 1, y) * jv(nu, x)) / (x * x - y * y)
    m = 0.5 * (x + y)
    diag = 0.5 * (jv(nu, m) ** 2 - jv(nu - 1, m) * jv(nu + 1, m))
    out = np.sqrt(np.abs(x * y)) * np.where(near, diag, off)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# densities
# --------------------------------------------------------------------------

def density_erfc(xi, tau: float):
    """erfc(xi) / (2 pi (1 + tau))."""
    return erfc(xi) / (2.0 * math.pi * (1.0 + tau))


def density_interp_large_sigma(zeta, sigma: float):
    """sigma^2 hatK_sigma(sigma zeta, sigma zeta), computed in log space."""
    if not sigma >= 2:
        raise DomainError("the large-sigma density check needs sigma >= 2")
    z = _as_points(zeta)
    ld = _log_interp_diag(sigma * z, sigma, hat=True)
    out = np.exp(2.0 * math.log(sigma) + ld)
    return float(out[0]) if np.ndim(zeta) == 0 else out.reshape(np.shape(zeta))
