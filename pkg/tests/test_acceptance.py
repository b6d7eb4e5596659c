"""Acceptance suite.

Each criterion records a PASS/FAIL line that is printed in the terminal
summary.  Tolerances are the published ones and are never loosened here; a
criterion that cannot be met is left failing.  Companion tests next to a
criterion pin the behaviour that *is* observed, so regressions still show.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.interpolate import PchipInterpolator

from acceptance_registry import record
from chiral_edge.cli import run
from chiral_edge.ensemble import tau_for_sigma
from chiral_edge.fredholm import (
    airy_determinant_1d,
    cdf_table,
    distribution_mean,
    gumbel_cdf,
    last_particle_cdf,
)
from chiral_edge.kernels_finite import (
    WeightParams,
    density_finite,
    edge_point,
    kernel_contour,
    log_kernel_finite,
    orthogonality_gram,
    verify_orthogonality,
)
from chiral_edge.kernels_limit import (
    density_interp_large_sigma,
    interp_airy_matrix_contour,
    interp_airy_matrix_real,
    kernel_airy,
)
from chiral_edge.specfun import erfc
from chiral_edge.stats import Experiment, collect_points, ks_statistic, mc_last_particle, poisson_count_test
from oracles import airy_prime_at_zero

THRESHOLDS = json.loads((Path(__file__).parent / "fixtures" / "thresholds.json").read_text())

pytestmark = pytest.mark.slow


def _grid5():
    g = np.linspace(-2.0, 2.0, 5)
    return (g[:, None] + 1j * g[None, :]).ravel()


# ---------------------------------------------------------------- 1


def test_criterion_1_orthogonality():
    t0 = time.perf_counter()
    worst = 0.0
    for nu in range(4):
        G, h, _ = orthogonality_gram(8, nu, 2.0, 1.0)
        res = np.abs(G - np.diag(h)) / np.maximum(h[:, None], h[None, :])
        worst = max(worst, float(res.max()))
    spot = verify_orthogonality(0, 0, 0, 2.0, 1.0).numeric_inner_product.real
    spot_err = abs(spot - 2 * math.pi / 3) / (2 * math.pi / 3)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and spot_err <= 1e-6 and elapsed < 120
    record("1", ok, f"max residual {worst:.2e}, <L0,L0> rel err {spot_err:.1e}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- 2


def test_criterion_2_contour_equals_sum():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for n in (1, 2, 5, 10, 15, 20):
        for nu in range(4):
            for tau in (0.3, 0.5, 0.7, 0.9):
                wp = WeightParams(n, nu, tau)
                for _ in range(10):
                    a, b = edge_point(rng.uniform(-2, 2, 2) + 1j * rng.uniform(-1, 1, 2), wp)
                    x = kernel_contour(a, b, wp).to_complex()
                    y = np.exp(log_kernel_finite(a, b, wp))
                    worst = max(worst, abs(x - y) / abs(y))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 60
    record("2", ok, f"max rel diff {worst:.2e} over 960 pairs, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- 3


def test_criterion_3_representations_agree():
    t0 = time.perf_counter()
    pts = _grid5()
    worst = 0.0
    for s in (0.25, 0.5, 1.0, 2.0):
        A = np.exp(interp_airy_matrix_real(pts, pts, s))
        B = np.exp(interp_airy_matrix_contour(pts, pts, s))
        worst = max(worst, float(np.max(np.abs(A - B) / np.abs(A))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 60
    record("3", ok, f"max rel diff {worst:.2e}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- 4


def test_criterion_4_small_sigma_limit():
    pts = _grid5()
    K = np.exp(interp_airy_matrix_real(pts, pts, 0.01, hat=False))
    eta = pts.imag
    ref = (np.exp(-(eta[:, None] ** 2 + eta[None, :] ** 2) / 2)
           * kernel_airy(pts.real[:, None], pts.real[None, :]) / math.sqrt(math.pi))
    dev = float(np.max(np.abs(K - ref)))
    record("4-limit", dev <= 1e-3, f"max abs deviation at sigma=0.01: {dev:.2e}")
    assert dev <= 1e-3


def test_criterion_4_airy_constant_published_value():
    # the published decimal disagrees with its own oracle Ai'(0)^2 in the
    # sixth digit, so this check is expected to fail
    v = kernel_airy(0.0, 0.0)
    diff = abs(v - 0.066985946)
    record("4-constant", diff <= 1e-8, f"K_Airy(0,0) = {v:.12f}, published 0.066985946, diff {diff:.1e}")
    assert diff <= 1e-8


def test_criterion_4_airy_constant_oracle():
    v, ref = kernel_airy(0.0, 0.0), airy_prime_at_zero() ** 2
    diff = abs(v - ref)
    record("4-oracle", diff <= 1e-8, f"K_Airy(0,0) vs Ai'(0)^2 series oracle, diff {diff:.1e}")
    assert diff <= 1e-8


# ---------------------------------------------------------------- 5


def test_criterion_5_tracy_widom():
    t0 = time.perf_counter()
    mean2d = distribution_mean(lambda t: last_particle_cdf(0.0, t))
    mean1d = distribution_mean(airy_determinant_1d)
    gap = max(abs(last_particle_cdf(0.0, t) - airy_determinant_1d(t)) for t in np.arange(-3.0, 1.0 + 1e-9, 0.25))
    elapsed = time.perf_counter() - t0
    ok = abs(mean2d + 1.7711) <= 0.01 and abs(mean1d + 1.7711) <= 0.01 and gap <= 5e-4 and elapsed < 300
    record("5", ok, f"mean 2-D {mean2d:.5f}, 1-D {mean1d:.5f}, pointwise gap {gap:.1e}, {elapsed:.0f}s")
    assert ok


# ---------------------------------------------------------------- 6


def _scaled_density(n, tau, xi):
    return density_finite(np.asarray(xi) + 0j, WeightParams(n, 0, tau)) * 2 * math.pi * (1 + tau)


def test_criterion_6_erfc_profile_published_form():
    # measured plateau near 0.074 for n = 500..8000; see the companion below
    xi = np.arange(-3.0, 1.0 + 1e-9, 0.05)
    dev = float(np.max(np.abs(_scaled_density(2000, 0.5, xi) - erfc(xi))))
    record("6-erfc", dev <= 0.02, f"sup |2pi(1+tau) rho_n - erfc(xi)| = {dev:.4f} at n=2000")
    assert dev <= 0.02


def test_criterion_6_large_sigma():
    xi = np.linspace(-2.0, 2.0, 9)
    got = density_interp_large_sigma(xi + 0j, 6.0)
    ratio = got / (erfc(xi) / (4 * math.pi))
    worst = float(np.max(np.abs(ratio - 1)))
    record("6-large-sigma", worst <= 0.1, f"max relative deviation {worst:.3f} at sigma=6")
    assert worst <= 0.1


def test_erfc_profile_with_rescaled_argument_converges():
    # the finite-n diagonal follows erfc(sqrt(2/(1+tau)) xi) with an error
    # that halves when n grows fourfold
    tau = 0.5
    xi = np.arange(-3.0, 1.0 + 1e-9, 0.05)
    devs = [float(np.max(np.abs(_scaled_density(n, tau, xi) - erfc(math.sqrt(2 / (1 + tau)) * xi))))
            for n in (500, 2000)]
    assert devs[1] <= 0.025
    assert devs[1] <= 0.6 * devs[0]


def test_erfc_profile_eta_dependence_vanishes():
    tau = 0.5
    gaps = []
    for n in (500, 2000):
        wp = WeightParams(n, 0, tau)
        gaps.append(abs(density_finite(2j, wp) - density_finite(0j, wp)) * 2 * math.pi * (1 + tau))
    assert gaps[1] <= 0.6 * gaps[0]


# ---------------------------------------------------------------- 7


@pytest.fixture(scope="module")
def interpolating_run():
    n = 150
    exp = Experiment.build(n, 0, tau_for_sigma(n, 1.0), "interpolating", 2000, 20240601)
    t0 = time.perf_counter()
    samples = mc_last_particle(exp)
    grid = np.arange(-7.0, 5.0 + 1e-9, 0.25)
    F = [r.F for r in cdf_table(exp.scaling.sigma_n, grid, error_estimate=False)]
    interp = PchipInterpolator(grid, F, extrapolate=False)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.clip(np.nan_to_num(interp(x), nan=0.0) + (x > grid[-1]), 0.0, 1.0)

    return exp, ks_statistic(samples, cdf), time.perf_counter() - t0


def test_criterion_7_interpolating_monte_carlo(interpolating_run):
    exp, ks, elapsed = interpolating_run
    ok = ks <= 0.08 and elapsed < 900
    record("7", ok, f"KS {ks:.4f} (sigma_n={exp.scaling.sigma_n:.4f}), {elapsed:.0f}s on 1 core")
    assert ok


def test_interpolating_ks_regression_guard(interpolating_run):
    _, ks, _ = interpolating_run
    assert ks <= THRESHOLDS["interpolating_ks"]["n150"] + THRESHOLDS["ks_regression_margin"]


# ---------------------------------------------------------------- 8


@pytest.fixture(scope="module")
def gumbel_run():
    exp = Experiment.build(200, 0, 0.25, "gumbel", 5000, 20240601)
    pts = collect_points(exp)
    ks = ks_statistic(mc_last_particle(exp, points=pts), gumbel_cdf)
    box = poisson_count_test(pts, [(0.0, 1.0, -1.0, 1.0)])[0]
    return ks, box


def test_criterion_8_gumbel_ks(gumbel_run):
    ks, _ = gumbel_run
    record("8-ks", ks <= 0.1, f"KS vs exp(-exp(-t)) = {ks:.4f}")
    assert ks <= 0.1


def test_criterion_8_poisson_ratio(gumbel_run):
    _, box = gumbel_run
    r = box.mean_variance_ratio
    ok = 0.85 <= r <= 1.15
    record("8-poisson", ok, f"mean/variance {r:.3f} (mean {box.mean:.3f})")
    assert ok


def test_gumbel_ks_regression_guard(gumbel_run):
    ks, _ = gumbel_run
    assert ks <= THRESHOLDS["gumbel_ks"]["n200"] + THRESHOLDS["ks_regression_margin"]


# ---------------------------------------------------------------- 9


def test_criterion_9_determinism(tmp_path):
    outcomes = []
    for exp_args in (["--experiment", "last-particle", "--n", "40", "--sigma", "1.0", "--format", "csv"],
                     ["--experiment", "poisson", "--n", "60", "--tau", "0.25"],
                     ["--experiment", "density", "--n", "50", "--tau", "0.5", "--format", "csv"]):
        files = []
        for k in (1, 2, 1):
            out = tmp_path / f"mc{len(outcomes)}_{len(files)}"
            assert run(["mc", *exp_args, "--trials", "8", "--seed", "11", "--threads", str(k), "-o", str(out)]) == 0
            files.append(out.read_bytes())
        outcomes.append(files[0] == files[1] == files[2])
    samples = []
    for _ in range(2):
        out = tmp_path / f"s{len(samples)}.csv"
        assert run(["sample", "--n", "30", "--nu", "2", "--tau", "0.4", "--seed", "11", "--trial", "3",
                    "-o", str(out)]) == 0
        samples.append(out.read_bytes())
    outcomes.append(samples[0] == samples[1])
    ok = all(outcomes)
    record("9", ok, f"{sum(outcomes)}/{len(outcomes)} runs bitwise identical across thread counts")
    assert ok
