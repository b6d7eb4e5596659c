from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chiral_edge.errors import DomainError
from chiral_edge.specfun import (
    LogComplex,
    airy_ai,
    airy_ai_prime,
    bessel_k,
    composite_gauss_legendre,
    erfc,
    laguerre,
    laguerre_table,
    log_airy_ai,
    log_bessel_k,
    log_laguerre_sequence,
    log_sum_exp_complex,
    make_rule,
)
from oracles import airy_maclaurin, bessel_k_trapezoid, erfc_series, laguerre_explicit


# ---------------------------------------------------------------- Airy

def test_airy_at_zero_matches_series_value():
    assert airy_ai(0.0) == pytest.approx(0.35502805388781724, rel=1e-14)
    assert airy_ai(0.0) == pytest.approx(airy_maclaurin(0.0).real, rel=1e-14)


def test_airy_at_one_matches_series_value():
    assert airy_ai(1.0) == pytest.approx(0.13529241631288141, rel=1e-12)
    assert airy_ai(1.0) == pytest.approx(airy_maclaurin(1.0).real, rel=1e-12)


@pytest.mark.parametrize("z", [0.5 + 0.5j, -2.0 + 1.0j, 2.5 - 1.5j, -3.0, 1.0j * 2.0])
def test_airy_complex_matches_series(z):
    assert abs(airy_ai(z) - airy_maclaurin(z)) <= 1e-12 * abs(airy_maclaurin(z))


def test_airy_large_argument_asymptotics():
    z = 25.0
    leading = math.exp(-2.0 / 3.0 * z ** 1.5) / (2.0 * math.sqrt(math.pi) * z ** 0.25)
    assert airy_ai(z) / leading == pytest.approx(1.0, abs=1e-2)


def test_airy_log_form_survives_underflow():
    lv = airy_ai(400.0, log=True)
    expected = -2.0 / 3.0 * 400.0 ** 1.5 - math.log(2.0 * math.sqrt(math.pi) * 400.0 ** 0.25)
    assert lv.log_magnitude == pytest.approx(expected, abs=1e-4)
    assert airy_ai(400.0) == 0.0


def test_log_airy_consistent_with_linear():
    z = np.array([0.3 + 0.2j, -1.5 + 0.4j, 4.0 - 2.0j])
    assert np.allclose(np.exp(log_airy_ai(z)), airy_ai(z), rtol=1e-13)


def test_airy_ode_residual():
    h = 1e-3
    g = np.linspace(-5, 5, 7)
    zs = (g[:, None] + 1j * g[None, :] * 0.6).ravel()
    zs = zs[np.abs(zs) <= 5]
    res = (airy_ai(zs + h) - 2 * airy_ai(zs) + airy_ai(zs - h)) / h ** 2 - zs * airy_ai(zs)
    # truncation error is h^2/12 |Ai''''| ~ h^2 |z|^2 |Ai| / 12
    scale = (1.0 + np.abs(zs) ** 2) * np.abs(airy_ai(zs))
    assert np.max(np.abs(res) / scale) < h ** 2


def test_airy_rejects_nonfinite():
    with pytest.raises(DomainError):
        airy_ai(float("nan"))
    with pytest.raises(DomainError):
        airy_ai_prime(complex("inf"))


# ---------------------------------------------------------------- Bessel K

def test_bessel_k0_at_one_matches_quadrature_oracle():
    assert abs(bessel_k(0, 1.0)) == pytest.approx(0.42102443824070834, rel=1e-13)
    assert abs(bessel_k(0, 1.0)) == pytest.approx(bessel_k_trapezoid(0, 1.0), rel=1e-12)


@pytest.mark.parametrize("nu,x", [(0, 1e-6), (1, 1e-3), (2, 0.7), (4, 13.0), (6, 300.0), (3, 1e5)])
def test_bessel_k_against_trapezoid(nu, x):
    got = math.exp(log_bessel_k(nu, x))
    if x < 1e3:
        assert got == pytest.approx(bessel_k_trapezoid(nu, x), rel=1e-10)
    else:
        # oracle underflows; compare log forms with the asymptotic series
        mu = 4 * nu * nu
        series = 1 + (mu - 1) / (8 * x) + (mu - 1) * (mu - 9) / (2 * (8 * x) ** 2)
        expected = 0.5 * math.log(math.pi / (2 * x)) - x + math.log(series)
        assert float(log_bessel_k(nu, x)) == pytest.approx(expected, abs=1e-10)


def test_bessel_recurrence_example():
    nu, x = 1, 2.5
    k = lambda v: abs(bessel_k(v, x))
    assert abs(x * k(nu + 1) - x * k(nu - 1) - 2 * nu * k(nu)) <= 1e-9 * k(nu + 1)


def test_bessel_recurrence_sweep():
    for nu in range(1, 7):
        for x in np.geomspace(0.1, 100, 15):
            lk = [float(log_bessel_k(v, x)) for v in (nu - 1, nu, nu + 1)]
            # divide through by K_{nu+1}
            r = x - x * math.exp(lk[0] - lk[2]) - 2 * nu * math.exp(lk[1] - lk[2])
            assert abs(r) <= 1e-9 * max(1.0, x)


def test_bessel_large_argument():
    ratio = abs(bessel_k(2, 50.0)) / (math.sqrt(math.pi / 100.0) * math.exp(-50.0))
    assert ratio == pytest.approx(1.0, abs=5e-2)


def test_bessel_log_form_far_out():
    lk = bessel_k(0, 1e6)
    assert lk.log_magnitude == pytest.approx(-1e6 + 0.5 * math.log(math.pi / 2e6), abs=1e-6)
    assert lk.phase == 0.0


@pytest.mark.parametrize("x", [0.0, -1.0, float("inf")])
def test_bessel_domain(x):
    with pytest.raises(DomainError):
        bessel_k(0, x)


# ---------------------------------------------------------------- Laguerre

def test_laguerre_examples():
    assert laguerre(0, 5, 3 + 4j) == 1
    assert laguerre(1, 2, 0.5j) == pytest.approx(3 - 0.5j)
    assert laguerre(2, 0, 3.0) == pytest.approx(-0.5, abs=1e-15)


@given(j=st.integers(0, 15), nu=st.integers(0, 5),
       x=st.floats(-6, 6), y=st.floats(-6, 6))
@settings(max_examples=80, deadline=None)
def test_laguerre_matches_explicit_polynomial(j, nu, x, y):
    z = complex(x, y)
    ref = laguerre_explicit(j, nu, z)
    scale = sum(math.comb(j + nu, j - i) * abs(z) ** i / math.factorial(i) for i in range(j + 1))
    assert abs(laguerre(j, nu, z) - ref) <= 1e-12 * scale


def test_laguerre_index_lowering_relation():
    rng = np.random.default_rng(3)
    for nu in (1, 2, 3):
        for _ in range(6):
            z = complex(*rng.uniform(-7, 7, 2))
            if abs(z) > 10:
                continue
            up = laguerre_table(11, nu + 1, z)
            down = laguerre_table(11, nu - 1, z)
            for j in range(11):
                lhs = z * up[j]
                rhs = nu * down[: j + 1].sum() - (j + 1) * down[j + 1]
                assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs), abs(rhs)) * 10 ** (j / 4)


def test_log_laguerre_sequence_matches_table_and_survives_overflow():
    z = 2.0 + 1.0j
    seq = list(log_laguerre_sequence(30, 1, z))
    table = laguerre_table(29, 1, z)
    assert np.allclose(np.exp(seq), table, rtol=1e-11)
    big = list(log_laguerre_sequence(400, 2, 1e6))
    assert np.isfinite(big[-1].real)
    # leading term dominates: L_k(x) ~ (-x)^k / k! for x >> k
    k = 399
    assert big[-1].real == pytest.approx(k * math.log(1e6) - math.lgamma(k + 1), rel=1e-4)


# ---------------------------------------------------------------- erfc

def test_erfc_examples():
    assert erfc(0.0) == 1.0
    assert erfc(0.7) + erfc(-0.7) == pytest.approx(2.0, abs=1e-15)
    assert erfc(1.0) == pytest.approx(0.15729920705028513, rel=1e-14)


@pytest.mark.parametrize("x", [-2.5, -1.0, 0.1, 0.5, 1.3, 2.0])
def test_erfc_against_series(x):
    assert erfc(x) == pytest.approx(erfc_series(x), rel=1e-12, abs=1e-15)


# ---------------------------------------------------------------- quadrature

def test_gauss_legendre_two_point():
    r = make_rule("gauss_legendre", 2)
    assert np.allclose(r.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    assert np.allclose(r.weights, [1.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("order", [1, 3, 8, 20, 64])
def test_gauss_legendre_invariants(order):
    r = make_rule("gauss_legendre", order)
    assert abs(r.weights.sum() - 2.0) <= 1e-14
    assert np.all(np.diff(r.nodes) > 0) and r.nodes[0] > -1 and r.nodes[-1] < 1
    for deg in range(2 * order):
        exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
        assert abs(r.integrate(lambda x: x ** deg) - exact) <= 1e-13


def test_gauss_legendre_x8():
    assert make_rule("gauss_legendre", 5).integrate(lambda x: x ** 8) == pytest.approx(2 / 9, abs=1e-13)


def test_circle_rule_residue():
    r = make_rule("circle_trapezoid", 64, (0.0, 1.0))
    assert abs(r.integrate(lambda u: 1 / u) - 2j * math.pi) <= 1e-13
    k = np.arange(64)
    assert np.allclose(r.weights, 2j * math.pi * np.exp(2j * math.pi * k / 64) / 64)


def test_circle_rule_geometric_convergence():
    f = lambda u: np.exp(u) / (u - 0.5) / (u - 1.8)
    exact = 2j * math.pi * math.exp(0.5) / (0.5 - 1.8)
    errs = [abs(make_rule("circle_trapezoid", m, (0.0, 1.0)).integrate(f) - exact) for m in (8, 16, 32)]
    assert errs[1] * 10 <= errs[0] and errs[2] * 10 <= errs[1]


def test_rule_domain_errors():
    with pytest.raises(DomainError):
        make_rule("gauss_legendre", 4, (1.0, 1.0))
    with pytest.raises(DomainError):
        make_rule("circle_trapezoid", 4, (0.0, -1.0))
    with pytest.raises(DomainError):
        make_rule("gauss_legendre", 0)
    with pytest.raises(DomainError):
        make_rule("simpson", 4)


def test_halfline_rule_integrates_exponential():
    r = make_rule("halfline_exp", 30, (1.0, 2.0))
    assert r.integrate(lambda x: np.exp(-2 * (x - 1.0)) * (x - 1.0)) == pytest.approx(0.25, rel=1e-12)


def test_composite_rule():
    r = composite_gauss_legendre([0.0, 0.5, 2.0, 3.0], 10)
    assert r.integrate(np.sin) == pytest.approx(1 - math.cos(3.0), rel=1e-14)
    assert not r.nodes.flags.writeable


# ---------------------------------------------------------------- LogComplex

finite_c = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False).filter(
    lambda z: abs(z) > 1e-6)


@given(a=finite_c, b=finite_c)
@settings(max_examples=100, deadline=None)
def test_logcomplex_multiplication_adds_fields(a, b):
    la, lb = LogComplex.from_complex(a), LogComplex.from_complex(b)
    p = la * lb
    assert p.log_magnitude == pytest.approx(la.log_magnitude + lb.log_magnitude, abs=1e-12)
    assert -math.pi < p.phase <= math.pi
    assert abs(p.to_complex() - a * b) <= 1e-12 * abs(a * b)
    assert abs((la / lb).to_complex() - a / b) <= 1e-12 * abs(a / b)


def test_logcomplex_phase_branch_and_zero():
    assert LogComplex.from_complex(-1.0).phase == pytest.approx(math.pi)
    z = LogComplex.from_complex(0.0)
    assert z.is_zero and z.to_complex() == 0
    big = LogComplex.from_log(1e4 + 0.5j)
    assert math.isfinite(big.log_magnitude) and big.phase == pytest.approx(0.5)
    assert LogComplex.from_log(complex(0, 3 * math.pi)).phase == pytest.approx(math.pi)


def test_log_sum_exp_complex():
    vals = np.array([1e3 + 0.1j, 1e3 + 2.0j, -np.inf + 0j])
    ref = 1e3 + cmath.log(cmath.exp(0.1j) + cmath.exp(2.0j))
    assert abs(log_sum_exp_complex(vals) - ref) < 1e-12
    assert log_sum_exp_complex(np.array([-np.inf + 0j])).real == -np.inf
