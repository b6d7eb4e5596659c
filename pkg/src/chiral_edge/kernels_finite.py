"""Finite-n correlation kernel of the chiral two-matrix model.

The kernel is a weighted sum of Laguerre polynomials in the squared variables
and is evaluated in log form throughout: at n in the thousands the individual
factors span thousands of orders of magnitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConfigurationError, DomainError, NumericalError
from .specfun import (
    LogComplex,
    QuadratureRule,
    composite_gauss_legendre,
    laguerre_table,
    log_bessel_k,
    log_laguerre_sequence,
    make_rule,
)

__all__ = [
    "WeightParams",
    "OrthogonalityReport",
    "OrthogonalityQuadrature",
    "weight_log",
    "log_weight",
    "kernel_finite",
    "log_kernel_finite",
    "kernel_contour",
    "default_contour_rules",
    "density_finite",
    "edge_point",
    "orthogonality_norm",
    "orthogonality_gram",
    "verify_orthogonality",
]


@dataclass(frozen=True)
class WeightParams:
    n: int
    nu: int
    tau: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if int(self.nu) != self.nu or self.nu < 0:
            raise DomainError("nu must be a non-negative integer")
        if not 0.0 < self.tau < 1.0:
            raise DomainError(f"the weight needs 0 < tau < 1, got {self.tau!r}")

    @property
    def a(self) -> float:
        return 2.0 * self.n / (1.0 - self.tau ** 2)

    @property
    def b(self) -> float:
        return 2.0 * self.tau * self.n / (1.0 - self.tau ** 2)

    @property
    def c(self) -> float:
        return self.n / self.tau


def log_weight(s, wp: WeightParams) -> np.ndarray:
    """log of |s|^(nu+1) exp(2 tau n Re s / (1-tau^2)) K_nu(2n|s|/(1-tau^2))."""
    s = np.asarray(s, dtype=complex)
    r = np.abs(s)
    if np.any(r == 0):
        raise DomainError("the weight is singular at s = 0")
    one_m = 1.0 - wp.tau ** 2
    return ((wp.nu + 1) * np.log(r) + 2.0 * wp.tau * wp.n * s.real / one_m
            + log_bessel_k(wp.nu, 2.0 * wp.n * r / one_m))


def weight_log(s: complex, wp: WeightParams) -> LogComplex:
    """The (real, positive) weight at a single point, as a LogComplex."""
    return LogComplex(float(log_weight(complex(s), wp)), 0.0)


def _log_prefactor(wp: WeightParams) -> float:
    return (math.log(8.0) + (2 + wp.nu) * math.log(wp.n) - math.log(math.pi)
            - math.log(1.0 - wp.tau ** 2))


def _log_laguerre_sum(z1: np.ndarray, z2: np.ndarray, wp: WeightParams) -> np.ndarray:
    """log sum_{k<n} tau^{2k} k!/(k+nu)! L_k(z1) L_k(z2), elementwise."""
    n, nu, tau = wp.n, wp.nu, wp.tau
    log_tau2 = 2.0 * math.log(tau)
    acc = np.zeros(z1.shape, dtype=complex)
    top = np.full(z1.shape, -np.inf)
    seq2 = log_laguerre_sequence(n, nu, z2)
    for k, l1 in enumerate(log_laguerre_sequence(n, nu, z1)):
        l2 = next(seq2)
        term = k * log_tau2 + gammaln(k + 1) - gammaln(k + nu + 1) + l1 + l2
        re = term.real
        grow = re > top
        if np.any(grow):
            with np.errstate(invalid="ignore", over="ignore"):
                factor = np.where(np.isfinite(top), np.exp(top - re), 0.0)
            acc = np.where(grow, acc * factor, acc)
            top = np.where(grow, re, top)
        with np.errstate(invalid="ignore"):
            acc = acc + np.where(np.isneginf(re), 0.0, np.exp(term - top))
    with np.errstate(divide="ignore"):
        return np.log(acc) + top


def log_kernel_finite(zeta1, zeta2, wp: WeightParams) -> np.ndarray:
    """Complex log of the kernel, elementwise over broadcast ``zeta1, zeta2``.

    Points with Re zeta <= 0 give -inf (the kernel vanishes there).
    """
    z1, z2 = np.broadcast_arrays(np.asarray(zeta1, dtype=complex), np.asarray(zeta2, dtype=complex))
    if np.any(z1 == 0) or np.any(z2 == 0):
        raise DomainError("the kernel is undefined at zeta = 0")
    out = np.full(z1.shape, complex(-np.inf, 0.0))
    live = (z1.real > 0) & (z2.real > 0)
    if not np.any(live):
        return out
    a, b = z1[live], z2[live]
    s1, s2 = a * a, b * b
    lw = 0.5 * (log_weight(s1, wp) + log_weight(s2, wp))
    lsum = _log_laguerre_sum(wp.c * s1, wp.c * np.conj(s2), wp)
    out[live] = _log_prefactor(wp) + lw + lsum
    return out


def kernel_finite(zeta1: complex, zeta2: complex, wp: WeightParams) -> LogComplex:
    """The correlation kernel K_n(zeta1, zeta2) as a LogComplex."""
    return LogComplex.from_log(complex(log_kernel_finite(zeta1, zeta2, wp)))


# --------------------------------------------------------------------------
# double contour representation
# --------------------------------------------------------------------------

def default_contour_rules(wp: WeightParams, m: int = 512) -> tuple[QuadratureRule, QuadratureRule]:
    """Circles through the neighbourhood of the edge saddle points.

    At the spectral edge the saddles of the u and v integrands sit at -tau and
    -1/tau; radii 0.9 tau and 1.1/tau keep tau^2 |v| > |u| with a margin.
    """
    r1 = 0.9 * wp.tau
    r2 = 1.1 / wp.tau
    return (make_rule("circle_trapezoid", m, (0.0, r1)),
            make_rule("circle_trapezoid", m, (0.0, r2)))


def _circle_radius(rule: QuadratureRule) -> float:
    if rule.kind != "circle_trapezoid":
        raise ConfigurationError("contour rules must be circle_trapezoid rules")
    r = np.abs(rule.nodes)
    if np.ptp(r) > 1e-12 * r.max():
        raise ConfigurationError("contour rules must be centred at the origin")
    return float(r.mean())


def _log_laguerre_sum_contour(z1: complex, z2: complex, wp: WeightParams,
                              rule1: QuadratureRule, rule2: QuadratureRule) -> complex:
    n, al, tau = wp.n, wp.nu, wp.tau
    r1, r2 = _circle_radius(rule1), _circle_radius(rule2)
    if not r1 < 1.0:
        raise ConfigurationError(f"gamma_1 must exclude u = 1 (radius {r1} >= 1)")
    if not r2 > 1.0:
        raise ConfigurationError(f"gamma_2 must enclose v = 1 (radius {r2} <= 1)")
    if not tau * tau * r2 > r1 * (1.0 + 1e-9):
        raise ConfigurationError(
            f"gamma_2 must enclose u/tau^2 for every u on gamma_1: need tau^2 R2 > r1, "
            f"got tau^2 R2 = {tau * tau * r2:.6g}, r1 = {r1:.6g}")
    if z1 == 0:
        raise DomainError("contour form needs z1 != 0")
    u, du = rule1.nodes, rule1.weights
    v, dv = rule2.nodes, rule2.weights
    log_a = (al * np.log(u - 1.0) - (n + al) * np.log(u) + z1 * u / (u - 1.0)
             - np.log(u - 1.0) + np.log(du))
    log_b = ((n + al) * np.log(v) - al * np.log(v - 1.0) - z2 * v / (v - 1.0)
             - np.log(v - 1.0) + np.log(dv))
    ma, mb = log_a.real.max(), log_b.real.max()
    A = np.exp(log_a - ma)
    B = np.exp(log_b - mb)
    C = 1.0 / (tau * tau * v[:, None] - u[None, :])
    total = B @ C @ A
    return (2 * n * math.log(tau) + z2 - math.log(4.0 * math.pi ** 2) - al * np.log(z1)
            + ma + mb + np.log(total))


def kernel_contour(zeta1: complex, zeta2: complex, wp: WeightParams,
                   rule1: QuadratureRule | None = None,
                   rule2: QuadratureRule | None = None) -> LogComplex:
    """The kernel with its Laguerre sum replaced by the double contour integral."""
    zeta1, zeta2 = complex(zeta1), complex(zeta2)
    if zeta1 == 0 or zeta2 == 0:
        raise DomainError("the kernel is undefined at zeta = 0")
    if zeta1.real <= 0 or zeta2.real <= 0:
        return LogComplex(-math.inf, 0.0)
    if rule1 is None or rule2 is None:
        d1, d2 = default_contour_rules(wp)
        rule1 = rule1 or d1
        rule2 = rule2 or d2
    s1, s2 = zeta1 * zeta1, zeta2 * zeta2
    lsum = _log_laguerre_sum_contour(wp.c * s1, wp.c * s2.conjugate(), wp, rule1, rule2)
    lw = 0.5 * (float(log_weight(s1, wp)) + float(log_weight(s2, wp)))
    return LogComplex.from_log(_log_prefactor(wp) + lw + lsum)


# --------------------------------------------------------------------------
# density
# --------------------------------------------------------------------------

def edge_point(zeta, wp: WeightParams):
    """z = (1+tau) + sqrt((1-tau)/(2n)) zeta."""
    return (1.0 + wp.tau) + math.sqrt((1.0 - wp.tau) / (2.0 * wp.n)) * np.asarray(zeta, dtype=complex)


def density_finite(zeta, wp: WeightParams, return_imag: bool = False):
    """Edge-rescaled one-point density ((1-tau)/(2n)) K_n(z, z)."""
    z = edge_point(zeta, wp)
    lk = log_kernel_finite(z, z, wp)
    with np.errstate(under="ignore"):
        val = (1.0 - wp.tau) / (2.0 * wp.n) * np.exp(lk)
    if return_imag:
        return (val.real[()] if val.ndim == 0 else val.real), (val.imag[()] if val.ndim == 0 else val.imag)
    return val.real[()] if val.ndim == 0 else val.real


# --------------------------------------------------------------------------
# orthogonality in the complex plane
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OrthogonalityReport:
    j: int
    k: int
    nu: int
    numeric_inner_product: complex
    exact_norm: float
    residual: float
    error_estimate: float = 0.0

    @property
    def expected(self) -> float:
        return self.exact_norm if self.j == self.k else 0.0


@dataclass(frozen=True)
class OrthogonalityQuadrature:
    """Polar product rule: graded radial Gauss-Legendre panels x angular trapezoid."""

    radial_order: int = 24
    check_order: int = 16
    panel_width: float = 0.5
    grading_levels: int = 40
    tol: float = 1e-8
    cutoff_rel: float = 1e-18


def orthogonality_norm(j: int, nu: int, a: float, b: float) -> float:
    """Squared norm pi (j+nu)!/(a j!) (a/b)^{2j} (2a/(a^2-b^2))^{nu+1}."""
    if not a > b > 0:
        raise DomainError("need a > b > 0")
    log_h = (math.log(math.pi) + gammaln(j + nu + 1) - gammaln(j + 1) - math.log(a)
             + 2 * j * math.log(a / b) + (nu + 1) * math.log(2.0 * a / (a * a - b * b)))
    return math.exp(log_h)


def _log_radial_bound(r, jmax, nu, a, b, c):
    # |L_j(cz)| <= L_j(-c|z|): all coefficients of L_j(-x) are positive
    lj = laguerre_table(jmax, nu, -c * r).real[jmax]
    return (nu + 1) * np.log(r) + 2 * np.log(lj) + b * r + log_bessel_k(nu, a * r) + math.log(2 * math.pi)


def _radial_cutoff(jmax, nu, a, b, c, h_min, rel):
    target = math.log(h_min * rel)
    r = 1.0 / (a - b)
    while True:
        val = _log_radial_bound(np.array([r, 1.05 * r]), jmax, nu, a, b, c)
        if val[0] < target and val[1] < val[0]:
            return r
        r *= 1.1
        if r > 1e7:
            raise NumericalError("radial cutoff search diverged", a=a, b=b, jmax=jmax)


def _gram(jmax, nu, a, b, r_cut, order, quad: OrthogonalityQuadrature):
    c = (a * a - b * b) / (2.0 * b)
    # geometric grading towards r = 0 handles the log singularity of K_0
    first = min(quad.panel_width, r_cut)
    graded = first * 2.0 ** -np.arange(quad.grading_levels, 0, -1)
    n_uniform = max(1, int(math.ceil((r_cut - first) / quad.panel_width)))
    edges = np.concatenate(([0.0], graded, np.linspace(first, r_cut, n_uniform + 1)))
    radial = composite_gauss_legendre(edges, order)
    m_ang = int(max(64, 2 * (b * r_cut + 2 * jmax) + 64))
    theta = 2 * np.pi * np.arange(m_ang) / m_ang
    cos_t = np.cos(theta)
    eith = np.exp(1j * theta)
    G = np.zeros((jmax + 1, jmax + 1), dtype=complex)
    r_all, w_all = radial.nodes, radial.weights
    chunk = max(1, 200000 // m_ang)
    for start in range(0, len(r_all), chunk):
        r = r_all[start:start + chunk]
        w = w_all[start:start + chunk]
        log_rad = np.log(w) + (nu + 1) * np.log(r) + log_bessel_k(nu, a * r) + math.log(2 * np.pi / m_ang)
        wt = np.exp(log_rad[:, None] + b * r[:, None] * cos_t[None, :])
        Lz = laguerre_table(jmax, nu, c * r[:, None] * eith[None, :])
        Lw = Lz * wt[None]
        G += np.einsum("jpq,kpq->jk", Lw, Lz.conj())
    return G


def orthogonality_gram(jmax: int, nu: int, a: float, b: float,
                       quad: OrthogonalityQuadrature | None = None):
    """Gram matrix <L_j, L_k> for j, k <= jmax, exact norms and an error estimate.

    The estimate is the entrywise difference between two radial orders.
    """
    quad = quad or OrthogonalityQuadrature()
    if not a > b > 0:
        raise DomainError("need a > b > 0")
    c = (a * a - b * b) / (2.0 * b)
    h = np.array([orthogonality_norm(j, nu, a, b) for j in range(jmax + 1)])
    r_cut = _radial_cutoff(jmax, nu, a, b, c, h.min(), quad.cutoff_rel)
    G = _gram(jmax, nu, a, b, r_cut, quad.radial_order, quad)
    G_check = _gram(jmax, nu, a, b, r_cut, quad.check_order, quad)
    scale = np.maximum(h[:, None], h[None, :])
    err = np.abs(G - G_check) / scale
    return G, h, err


def verify_orthogonality(j: int, k: int, nu: int, a: float, b: float,
                         quad: OrthogonalityQuadrature | None = None) -> OrthogonalityReport:
    """Numerically integrate <L_j^nu, L_k^nu> and compare with h_j delta_jk."""
    quad = quad or OrthogonalityQuadrature()
    if min(j, k, nu) < 0:
        raise DomainError("indices must be non-negative")
    G, h, err = orthogonality_gram(max(j, k), nu, a, b, quad)
    est = float(err[j, k])
    if est > quad.tol:
        raise NumericalError("orthogonality quadrature did not converge",
                             j=j, k=k, nu=nu, estimate=est, tol=quad.tol)
    expected = h[j] if j == k else 0.0
    residual = abs(G[j, k] - expected) / max(h[j], h[k])
    return OrthogonalityReport(j, k, nu, complex(G[j, k]), float(h[j]), float(residual), est)
