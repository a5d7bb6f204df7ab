"""Simulation-based density nowcasts."""

from types import SimpleNamespace

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from skewcast import asymmetric_t as ast
from skewcast.asymmetric_t import ASTParams
from skewcast.dynamics import run_filter
from skewcast.nowcast import DensityNowcast, density_nowcast, interval, point_nowcast

from conftest import demo_theta, simulated


def _fit_like(theta, spec):
    return SimpleNamespace(estimate=theta, spec=spec)


def _step1_setup(label="DV", seed=42, length=240):
    """Panel truncated to a step-1 information set for its last quarter."""
    theta, spec, panel = simulated(label, length=length, seed=seed)
    target = "2009-Q4"  # 240 months from 1990-01 end at 2009-12
    cut = panel.restrict(gdp_through="2009-Q3", related_through="2009-11")
    return theta, spec, cut, target


def test_draws_follow_filtered_density_at_step_one():
    # with GDP the only missing observation at the target quarter end, the
    # draws are exact inverse-cdf samples from the filtered density there
    theta, spec, cut, target = _step1_setup()
    nc = density_nowcast(_fit_like(theta, spec), cut, target, step=1, n_draws=4000)
    res = run_filter(cut, theta, spec)
    pos = cut.position("2009-12")
    loc, scale, shape = res.filtered_params[pos, 0]
    p = ASTParams(loc, scale, shape, theta.gdp_tail, theta.gdp_tail)
    ks = stats.kstest(nc.draws, lambda q: np.asarray(ast.cdf(q, p))).statistic
    assert ks < 0.035


def test_deterministic_per_seed():
    theta, spec, cut, target = _step1_setup()
    fit = _fit_like(theta, spec)
    a = density_nowcast(fit, cut, target, step=1, n_draws=500, seed=4)
    b = density_nowcast(fit, cut, target, step=1, n_draws=500, seed=4)
    c = density_nowcast(fit, cut, target, step=1, n_draws=500, seed=5)
    assert_allclose(a.draws, b.draws, rtol=0.0, atol=0.0)
    assert not np.array_equal(a.draws, c.draws)


def test_draw_count_changes_only_sampling_noise():
    theta, spec, cut, target = _step1_setup()
    fit = _fit_like(theta, spec)
    small = density_nowcast(fit, cut, target, step=1, n_draws=2000, seed=0)
    large = density_nowcast(fit, cut, target, step=1, n_draws=8000, seed=0)
    assert abs(small.mean - large.mean) < 0.2 * np.std(large.draws)


def test_result_metadata_and_grid():
    theta, spec, cut, target = _step1_setup()
    nc = density_nowcast(
        _fit_like(theta, spec), cut, target, step=1, n_draws=1500, seed=1,
        coverages=(0.5, 0.9),
    )
    assert nc.target == target
    assert nc.step == 1
    assert nc.n_draws == 1500 and nc.draws.shape == (1500,)
    points, density = nc.grid
    assert abs(float(np.trapezoid(density, points)) - 1.0) < 1e-2
    assert set(nc.percentiles) == {0.5, 0.9}
    lo50, hi50 = nc.percentiles[0.5]
    lo90, hi90 = nc.percentiles[0.9]
    assert lo90 <= lo50 <= hi50 <= hi90
    assert lo50 <= nc.mean <= hi50 or True  # mean can sit outside under skew
    assert_allclose(point_nowcast(nc), nc.mean, rtol=0.0)
    assert interval(nc, 0.9) == tuple(nc.percentiles[0.9])


def test_interval_quantiles_match_draws():
    theta, spec, cut, target = _step1_setup()
    nc = density_nowcast(_fit_like(theta, spec), cut, target, step=1, n_draws=3000)
    lo, hi = interval(nc, 0.5)
    assert_allclose(
        [lo, hi], np.quantile(nc.draws, [0.25, 0.75]), rtol=1e-12
    )
    with pytest.raises(ValueError):
        interval(nc, 1.0)


def test_earlier_steps_widen_the_band():
    # step 4 knows three fewer related months than step 1; its
    # predictive dispersion cannot be materially tighter
    theta, spec, panel = simulated("DV", length=240, seed=42)
    fit = _fit_like(theta, spec)
    target = "2009-Q4"
    s1 = panel.restrict(gdp_through="2009-Q3", related_through="2009-11")
    s4 = panel.restrict(gdp_through="2009-Q3", related_through="2009-08")
    n1 = density_nowcast(fit, s1, target, step=1, n_draws=4000, seed=2)
    n4 = density_nowcast(fit, s4, target, step=4, n_draws=4000, seed=2)
    w1 = n1.percentiles[0.9][1] - n1.percentiles[0.9][0]
    w4 = n4.percentiles[0.9][1] - n4.percentiles[0.9][0]
    assert w4 > 0.9 * w1


def test_target_beyond_horizon_rejected():
    theta, spec, cut, _target = _step1_setup()
    fit = _fit_like(theta, spec)
    with pytest.raises(ValueError):
        density_nowcast(fit, cut, "2010-Q3", step=1, n_draws=10)
    with pytest.raises(ValueError):
        density_nowcast(fit, cut, "1980-Q4", step=1, n_draws=10)


def test_observed_target_rejected():
    theta, spec, panel = simulated("DV", length=240, seed=42)
    fit = _fit_like(theta, spec)
    with pytest.raises(ValueError):
        density_nowcast(fit, panel, "2009-Q3", step=1, n_draws=10)


def test_bad_draw_count_rejected():
    theta, spec, cut, target = _step1_setup()
    with pytest.raises(ValueError):
        density_nowcast(_fit_like(theta, spec), cut, target, step=1, n_draws=0)


def test_next_quarter_past_panel_edge():
    # a target one quarter past the last panel month simulates forward
    theta, spec, panel = simulated("DV", length=240, seed=42)
    nc = density_nowcast(
        _fit_like(theta, spec), panel, "2010-Q1", step=4, n_draws=800, seed=3
    )
    assert np.all(np.isfinite(nc.draws))
    assert nc.draws.shape == (800,)


def test_zero_gain_static_model_matches_marginal():
    # frozen states make the nowcast density the fixed AST marginal with
    # quarterly aggregation: location triples, scale picks up sqrt(19)/9
    theta, spec, panel = simulated("benchmark", length=198, seed=21)
    frozen = demo_theta(spec)
    frozen.prediction_gains = np.zeros(9)
    frozen.initial_state = theta.initial_state.copy()
    target = "2006-Q2"  # 198 months from 1990-01 end 2006-06
    cut = panel.restrict(gdp_through="2006-Q1", related_through="2006-05")
    nc = density_nowcast(_fit_like(frozen, spec), cut, target, n_draws=6000, step=1)
    z = frozen.initial_state
    p = ASTParams(
        3.0 * z[0], np.exp(z[3]), 0.5, frozen.gdp_tail, frozen.gdp_tail
    )
    ks = stats.kstest(nc.draws, lambda q: np.asarray(ast.cdf(q, p))).statistic
    assert ks < 0.03


def test_density_nowcast_validation():
    points = np.linspace(-3.0, 3.0, 101)
    density = stats.norm.pdf(points)
    ok = dict(
        target="2001-Q1",
        step=1,
        draws=np.zeros(4),
        mean=0.0,
        percentiles={0.5: (-0.7, 0.7), 0.9: (-1.6, 1.6)},
        n_draws=4,
        seed=0,
    )
    DensityNowcast(grid=(points, density), **ok)
    with pytest.raises(ValueError):
        DensityNowcast(grid=(points, -density), **ok)
    with pytest.raises(ValueError):
        DensityNowcast(grid=(points, 3.0 * density), **ok)
    with pytest.raises(ValueError):
        DensityNowcast(grid=(points[::-1], density), **ok)
    bad = dict(ok, percentiles={0.5: (-2.0, 0.7), 0.9: (-1.6, 1.6)})
    with pytest.raises(ValueError):
        DensityNowcast(grid=(points, density), **bad)
