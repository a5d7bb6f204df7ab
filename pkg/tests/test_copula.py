"""Bivariate copula log density, cdf, and sampler."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from skewcast import copula
from skewcast.copula import CopulaFamily, CopulaSpec


def test_independence_density_is_zero():
    spec = CopulaSpec(CopulaFamily.INDEPENDENCE)
    u = np.linspace(0.05, 0.95, 13)
    out = copula.logdensity(u, u[::-1], spec)
    assert_allclose(out, np.zeros_like(u), rtol=0.0, atol=0.0)


def test_gaussian_zero_dependence_is_zero():
    spec = CopulaSpec(CopulaFamily.GAUSSIAN, dependence=0.0)
    u1 = np.array([0.1, 0.5, 0.73])
    u2 = np.array([0.9, 0.2, 0.5])
    assert_allclose(copula.logdensity(u1, u2, spec), 0.0, atol=1e-14)


def test_gaussian_density_at_median():
    # at u1 = u2 = 0.5 both normal scores are zero, so the log density
    # reduces to -0.5 * log(1 - rho^2)
    rho = 0.5
    spec = CopulaSpec(CopulaFamily.GAUSSIAN, dependence=rho)
    got = float(copula.logdensity(0.5, 0.5, spec))
    assert_allclose(got, -0.5 * np.log(1.0 - rho ** 2), rtol=1e-12)


@pytest.mark.parametrize("rho", [-0.6, 0.0, 0.45, 0.8])
def test_gaussian_density_matches_direct_formula(rho):
    spec = CopulaSpec(CopulaFamily.GAUSSIAN, dependence=rho)
    rng = np.random.default_rng(11)
    u1 = rng.uniform(0.02, 0.98, size=40)
    u2 = rng.uniform(0.02, 0.98, size=40)
    x = stats.norm.ppf(u1)
    y = stats.norm.ppf(u2)
    expect = (
        -0.5 * np.log(1.0 - rho ** 2)
        - (rho ** 2 * (x ** 2 + y ** 2) - 2.0 * rho * x * y)
        / (2.0 * (1.0 - rho ** 2))
    )
    assert_allclose(copula.logdensity(u1, u2, spec), expect, rtol=1e-10)


def test_student_high_dof_approaches_gaussian():
    rho = 0.4
    t_spec = CopulaSpec(CopulaFamily.STUDENT_T, dependence=rho, dof=1e8)
    g_spec = CopulaSpec(CopulaFamily.GAUSSIAN, dependence=rho)
    u1 = np.linspace(0.1, 0.9, 9)
    u2 = np.linspace(0.85, 0.15, 9)
    assert_allclose(
        copula.logdensity(u1, u2, t_spec),
        copula.logdensity(u1, u2, g_spec),
        atol=1e-4,
    )


def test_student_density_symmetric_in_arguments():
    spec = CopulaSpec(CopulaFamily.STUDENT_T, dependence=0.55, dof=5.0)
    u1 = np.array([0.2, 0.66, 0.9])
    u2 = np.array([0.8, 0.31, 0.4])
    assert_allclose(
        copula.logdensity(u1, u2, spec), copula.logdensity(u2, u1, spec), rtol=1e-12
    )


@pytest.mark.parametrize(
    "spec",
    [
        CopulaSpec(CopulaFamily.GAUSSIAN, dependence=0.5),
        CopulaSpec(CopulaFamily.STUDENT_T, dependence=-0.4, dof=6.0),
    ],
)
def test_density_integrates_to_one(spec):
    n = 400
    edges = np.linspace(0.0, 1.0, n + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    uu, vv = np.meshgrid(mid, mid)
    dens = np.exp(copula.logdensity(uu.ravel(), vv.ravel(), spec))
    total = dens.sum() / (n * n)
    assert abs(total - 1.0) < 5e-3


def test_cdf_corners_and_uniform_margins():
    spec = CopulaSpec(CopulaFamily.GAUSSIAN, dependence=0.6)
    assert float(copula.copula_cdf(1.0, 1.0, spec)) == pytest.approx(1.0, abs=5e-3)
    # C(u, 1) = u for any copula
    for u in (0.25, 0.5, 0.8):
        assert float(copula.copula_cdf(u, 1.0, spec)) == pytest.approx(u, abs=5e-3)
        assert float(copula.copula_cdf(1.0, u, spec)) == pytest.approx(u, abs=5e-3)


def test_cdf_independence_is_product():
    spec = CopulaSpec(CopulaFamily.INDEPENDENCE)
    got = float(copula.copula_cdf(0.3, 0.7, spec))
    assert got == pytest.approx(0.21, abs=5e-3)


def test_sample_rank_correlation_tracks_dependence():
    rho = 0.7
    spec = CopulaSpec(CopulaFamily.GAUSSIAN, dependence=rho)
    u = copula.copula_sample(60_000, spec, np.random.default_rng(7))
    assert u.shape == (60_000, 2)
    assert np.all((u > 0.0) & (u < 1.0))
    # Spearman's rho for the Gaussian copula is (6/pi) * arcsin(rho/2)
    target = 6.0 / np.pi * np.arcsin(rho / 2.0)
    got = stats.spearmanr(u[:, 0], u[:, 1]).statistic
    assert abs(got - target) < 0.02


def test_sample_margins_are_uniform():
    spec = CopulaSpec(CopulaFamily.STUDENT_T, dependence=0.5, dof=4.0)
    u = copula.copula_sample(40_000, spec, np.random.default_rng(3))
    for j in (0, 1):
        ks = stats.kstest(u[:, j], "uniform").statistic
        assert ks < 0.01


def test_sample_deterministic_per_seed():
    spec = CopulaSpec(CopulaFamily.GAUSSIAN, dependence=0.2)
    a = copula.copula_sample(128, spec, np.random.default_rng(9))
    b = copula.copula_sample(128, spec, np.random.default_rng(9))
    assert_allclose(a, b, rtol=0.0, atol=0.0)


def test_extreme_pit_values_are_clipped():
    spec = CopulaSpec(CopulaFamily.GAUSSIAN, dependence=0.9)
    out = copula.logdensity(np.array([0.0, 1.0]), np.array([0.0, 1.0]), spec)
    assert np.all(np.isfinite(out))
    edge = copula.logdensity(copula.PIT_CLIP, copula.PIT_CLIP, spec)
    assert_allclose(out[0], edge, rtol=1e-12)


def test_invalid_spec_rejected():
    with pytest.raises(ValueError):
        CopulaSpec(CopulaFamily.GAUSSIAN, dependence=1.0)
    with pytest.raises(ValueError):
        CopulaSpec(CopulaFamily.STUDENT_T, dependence=0.3, dof=0.0)
    with pytest.raises(ValueError):
        CopulaSpec("not_a_family", dependence=0.1)
