"""Simulation of panels and pseudo release vintages."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from skewcast import asymmetric_t as ast
from skewcast.asymmetric_t import ASTParams
from skewcast.copula import CopulaFamily, CopulaSpec
from skewcast.data import align_panel, log_diff, month_index, nowcast_schedule
from skewcast.modelspec import build_spec
from skewcast.synthetic import SimulationConfig, make_pseudo_vintages, simulate_panel

from conftest import demo_theta


def test_simulation_deterministic_per_seed():
    spec = build_spec("DV")
    theta = demo_theta(spec)
    a, sa = simulate_panel(SimulationConfig(theta, spec, 120, seed=7))
    b, sb = simulate_panel(SimulationConfig(theta, spec, 120, seed=7))
    c, _sc = simulate_panel(SimulationConfig(theta, spec, 120, seed=8))
    assert_allclose(a.y[a.mask == 1], b.y[b.mask == 1], rtol=0.0, atol=0.0)
    assert_allclose(sa, sb, rtol=0.0, atol=0.0)
    assert not np.array_equal(
        a.y[a.mask == 1], c.y[c.mask == 1]
    )


def test_panel_layout_and_masks():
    spec = build_spec("DVS")
    theta = demo_theta(spec)
    panel, states = simulate_panel(
        SimulationConfig(theta, spec, 96, seed=1, start_month="1995-01")
    )
    assert panel.n_months == 96
    assert states.shape == (96, 9)
    assert panel.monthly_index[0] == "1995-01"
    # related observed every month, GDP only at quarter ends
    assert panel.mask[1].all()
    gdp_cols = np.flatnonzero(panel.mask[0])
    assert np.all(panel.months[gdp_cols] % 3 == 2)
    assert gdp_cols.size == 96 // 3


def test_zero_gain_independent_normal_moments():
    # with zero gains and an independence copula the draws are iid from
    # the fixed-state density, so sample moments have known targets
    spec = build_spec("benchmark", copula_family=CopulaFamily.INDEPENDENCE)
    theta = demo_theta(spec, dependence=0.0)
    theta.prediction_gains = np.zeros(9)
    theta.copula = CopulaSpec(CopulaFamily.INDEPENDENCE)
    n = 3000
    panel, states = simulate_panel(SimulationConfig(theta, spec, n, seed=6))
    assert_allclose(states, np.tile(theta.initial_state, (n, 1)), atol=0.0)
    z = theta.initial_state
    rel = panel.y[1, panel.mask[1] == 1]
    mu2 = z[1]
    sd2 = np.exp(z[4]) * ast.k_const(np.inf)
    assert abs(rel.mean() - mu2) < 4.0 * sd2 / np.sqrt(rel.size)
    assert abs(rel.std() - sd2) < 4.0 * sd2 / np.sqrt(2.0 * rel.size)
    gdp = panel.y[0, panel.mask[0] == 1]
    mu1 = 3.0 * z[0]
    sd1 = np.exp(z[3]) * ast.k_const(np.inf)
    assert abs(gdp.mean() - mu1) < 4.0 * sd1 / np.sqrt(gdp.size)
    # independence: quarter-end GDP and related draws are uncorrelated
    both = (panel.mask[0] == 1) & (panel.mask[1] == 1)
    r = stats.pearsonr(panel.y[0, both], panel.y[1, both]).statistic
    assert abs(r) < 4.0 / np.sqrt(both.sum())


def test_zero_gain_draws_match_quantile_transform():
    # the simulator feeds copula uniforms through the marginal quantile;
    # at fixed states the KS distance to that law is small
    spec = build_spec("t", copula_family=CopulaFamily.GAUSSIAN)
    theta = demo_theta(spec, dependence=0.4)
    theta.prediction_gains = np.zeros(9)
    n = 2400
    panel, _states = simulate_panel(SimulationConfig(theta, spec, n, seed=9))
    z = theta.initial_state
    p2 = ASTParams(z[1], np.exp(z[4]), 0.5, theta.related_tail, theta.related_tail)
    rel = panel.y[1]
    ks = stats.kstest(rel, lambda q: np.asarray(ast.cdf(q, p2))).statistic
    assert ks < 0.03


def test_rank_correlation_tracks_copula_dependence():
    spec = build_spec("benchmark", copula_family=CopulaFamily.GAUSSIAN)
    theta = demo_theta(spec, dependence=0.7)
    theta.prediction_gains = np.zeros(9)
    panel, _ = simulate_panel(SimulationConfig(theta, spec, 6000, seed=10))
    both = (panel.mask[0] == 1) & (panel.mask[1] == 1)
    rho_s = stats.spearmanr(panel.y[0, both], panel.y[1, both]).statistic
    target = 6.0 / np.pi * np.arcsin(0.7 / 2.0)
    assert abs(rho_s - target) < 0.05


def test_explosive_dynamics_raise():
    spec = build_spec("DV")
    theta = demo_theta(spec)
    theta.scale_common_ar = 1.4  # unstable root
    theta.initial_state[5] = 1.0
    with pytest.raises(RuntimeError):
        simulate_panel(SimulationConfig(theta, spec, 240, seed=2))


def test_short_simulations_rejected():
    spec = build_spec("benchmark")
    theta = demo_theta(spec)
    with pytest.raises(ValueError):
        SimulationConfig(theta, spec, 24, seed=0)


def test_pseudo_vintages_nest(dv_panel):
    _theta, spec, panel = dv_panel
    schedule = nowcast_schedule("2005-Q1") + nowcast_schedule("2005-Q2")
    vintages = make_pseudo_vintages(panel, schedule)
    assert len(vintages) == 8
    as_ofs = [v.as_of for v in vintages]
    assert as_ofs == sorted(as_ofs)
    for early, late in zip(vintages[:-1], vintages[1:]):
        ng, nm = len(early.gdp_levels), len(late.gdp_levels)
        assert ng <= nm
        assert_allclose(
            late.gdp_levels.values[:ng], early.gdp_levels.values, rtol=1e-12
        )
        nr = len(early.related_levels)
        assert_allclose(
            late.related_levels.values[:nr], early.related_levels.values, rtol=1e-12
        )


def test_pseudo_vintage_growth_recovers_panel(dv_panel):
    _theta, spec, panel = dv_panel
    vintages = make_pseudo_vintages(panel, nowcast_schedule("2005-Q3"))
    v = vintages[-1]
    back = align_panel(v, spec)
    # growth recomputed from integrated levels matches the panel values
    for month in ("2004-06", "2004-09", "2004-12"):
        pos_a, pos_b = panel.position(month), back.position(month)
        assert_allclose(back.y[0, pos_b], panel.y[0, pos_a], rtol=1e-9)
    m_last = v.related_levels.dates[-1]
    assert back.last_observed_month(1) == m_last
    assert_allclose(
        back.y[1, back.position(m_last)],
        panel.y[1, panel.position(m_last)],
        rtol=1e-9,
    )


def test_pseudo_vintage_span_checks(dv_panel):
    _theta, _spec, panel = dv_panel
    # the panel starts 1990-01; the very first quarter has no growth rate
    with pytest.raises(ValueError):
        make_pseudo_vintages(panel, nowcast_schedule("1990-Q1"))
    with pytest.raises(ValueError):
        make_pseudo_vintages(panel, nowcast_schedule("2035-Q1"))
    assert make_pseudo_vintages(panel, []) == []


def test_vintage_as_of_dates_follow_timing(dv_panel):
    _theta, _spec, panel = dv_panel
    vintages = make_pseudo_vintages(panel, nowcast_schedule("2005-Q1"))
    # step 4 is dated late in the first target month, the rest early
    assert vintages[0].as_of == "2005-01-25"
    assert vintages[1].as_of == "2005-02-08"
    assert vintages[2].as_of == "2005-03-08"
    assert vintages[3].as_of == "2005-04-08"
