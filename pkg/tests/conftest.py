"""Shared synthetic data generating processes for the test suite."""

import numpy as np
import pytest

from skewcast.copula import CopulaFamily, CopulaSpec
from skewcast.modelspec import ModelParameters, build_spec
from skewcast.synthetic import SimulationConfig, simulate_panel


def demo_theta(spec, dependence=0.5):
    """A stable parameter point consistent with ``spec``'s active blocks."""
    z0 = np.zeros(9)
    z0[0], z0[1], z0[3], z0[4] = 0.3, 0.1, -0.2, 0.1
    gains = np.zeros(9)
    gains[0:3] = (0.02, 0.03, 0.06)
    if spec.dynamic_scale:
        gains[3:6] = (0.02, 0.02, 0.04)
    if spec.dynamic_shape:
        gains[6:9] = (0.004, 0.004, 0.008)
    finite_tail = ("student_t", "skew_t", "ast")
    theta = ModelParameters(
        initial_state=z0,
        prediction_gains=gains,
        loc_common_ar=0.3 if spec.loc_common_ar else 0.0,
        scale_common_ar=0.9 if spec.dynamic_scale else 0.0,
        shape_trend_ar=0.98 if spec.dynamic_shape else 0.0,
        shape_common_ar=0.9 if spec.dynamic_shape else 0.0,
        loc_loading=0.8,
        scale_loading=0.6,
        shape_loading=0.5,
        gdp_tail=8.0 if spec.gdp_family.value in finite_tail else np.inf,
        related_tail=8.0 if spec.related_family.value in finite_tail else np.inf,
    )
    if spec.copula_family is CopulaFamily.STUDENT_T:
        theta.copula = CopulaSpec(CopulaFamily.STUDENT_T, dependence, 8.0)
    elif spec.copula_family is CopulaFamily.GAUSSIAN:
        theta.copula = CopulaSpec(CopulaFamily.GAUSSIAN, dependence)
    return theta


def simulated(label, length=240, seed=42, dependence=0.5, **spec_kwargs):
    """(theta, spec, panel) for one model label."""
    spec = build_spec(label, **spec_kwargs)
    theta = demo_theta(spec, dependence=dependence)
    panel, _states = simulate_panel(SimulationConfig(theta, spec, length, seed))
    return theta, spec, panel


@pytest.fixture(scope="session")
def dv_panel():
    """A medium synthetic panel from the normal dynamic-scale model."""
    return simulated("DV", length=240, seed=42)


@pytest.fixture(scope="session")
def benchmark_panel():
    """A quarter-aligned panel from the constant-scale normal model."""
    return simulated("benchmark", length=198, seed=21)
