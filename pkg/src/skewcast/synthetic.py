"""Simulation from a known score-driven data generating process.

The generator is the model's own recursion run forward: each month the
states imply conditional density parameters through the links, a
copula-coupled uniform pair turns into observations through the marginal
quantile functions, and the drawn observations feed the scaled-score
update exactly as the filter would apply it. GDP is drawn at quarter-end
months directly from its aggregated conditional density; monthly GDP
levels are never instantiated, matching the model's own view of the data.

Panels can be exported as pseudo vintages: growth is integrated back into
strictly positive level series (base level 100) so the data module's CSV
pipeline round-trips the simulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import asymmetric_t
from .copula import copula_sample
from .data import (
    MONTHLY_TAG,
    QUARTERLY_TAG,
    ROLLING_TAG,
    NowcastStep,
    ObservationPanel,
    Series,
    Vintage,
    month_index,
    month_label,
    quarter_end_month,
    quarter_index,
    quarter_label,
)
from .dynamics import (
    build_transition,
    init_buffers,
    link_jacobian,
    link_parameters,
    push_buffers,
    quasi_score,
    step,
    validate_theta,
)
from .modelspec import ModelParameters, ModelSpec

__all__ = [
    "SimulationConfig",
    "make_pseudo_vintages",
    "simulate_panel",
]

_STATE_BOUND = 1e6
_BASE_LEVEL = 100.0


@dataclass
class SimulationConfig:
    """What to simulate: parameters, spec, span and seed.

    ``start_month`` anchors the calendar (GDP realizations land on the
    quarter-end months the grid contains). Lengths under 60 months are
    rejected; parameter-recovery tests need much more.
    """

    theta: ModelParameters
    spec: ModelSpec
    length: int
    seed: int
    start_month: str = "1990-01"
    vintage_schedule: list | None = None

    def __post_init__(self):
        self.length = int(self.length)
        if self.length < 60:
            raise ValueError("simulation length must be at least 60 months")
        month_index(self.start_month)
        validate_theta(self.theta, self.spec)


def simulate_panel(cfg: SimulationConfig) -> tuple:
    """Draw one panel; returns (ObservationPanel, true state path (n, 9)).

    Deterministic per seed. Raises RuntimeError with the offending month
    if the state path explodes (|state| above 1e6).
    """
    theta, spec, n = cfg.theta, cfg.spec, cfg.length
    rng = np.random.default_rng(cfg.seed)
    uniforms = copula_sample(n, theta.copula, rng)
    trans = build_transition(theta, spec)
    buffers = init_buffers(theta, spec)
    z = theta.initial_state.copy()
    m0 = month_index(cfg.start_month)
    months = np.arange(m0, m0 + n)
    y = np.full((2, n), np.nan)
    mask = np.zeros((2, n), dtype=np.uint8)
    states = np.zeros((n, 9))
    for t in range(n):
        if not np.all(np.isfinite(z)) or np.any(np.abs(z) >= _STATE_BOUND):
            raise RuntimeError(
                f"simulated state path exploded at month {month_label(months[t])} "
                f"(t={t}); reduce gains or shorten the horizon"
            )
        states[t] = z
        p1, p2 = link_parameters(z, theta, spec, buffers)
        y2 = float(asymmetric_t.quantile(uniforms[t, 1], p2))
        y[1, t] = y2
        mask[1, t] = 1
        gdp_month = months[t] % 3 == 2
        if gdp_month:
            y1 = float(asymmetric_t.quantile(uniforms[t, 0], p1))
            y[0, t] = y1
            mask[0, t] = 1
        else:
            y1 = 0.0
        delta = np.array([bool(gdp_month), True])
        chain = link_jacobian(z, theta, spec, buffers)
        scored = quasi_score(np.array([y1, y2]), (p1, p2), delta, chain)
        _, predicted = step(z, scored, trans)
        push_buffers(buffers, z, theta)
        z = predicted
    index = tuple(month_label(mi) for mi in months)
    rel_tag = ROLLING_TAG if spec.related_loc_aggregated else MONTHLY_TAG
    panel = ObservationPanel(index, y, mask, (QUARTERLY_TAG, rel_tag))
    return panel, states


def _integrate_gdp_levels(panel: ObservationPanel) -> Series:
    cols = np.flatnonzero(panel.mask[0])
    if cols.size == 0:
        raise ValueError("panel has no GDP observations")
    quarters = panel.months[cols] // 3
    if np.any(np.diff(quarters) != 1):
        raise ValueError("observed GDP quarters must be contiguous")
    growth = panel.y[0, cols]
    levels = _BASE_LEVEL * np.exp(np.concatenate([[0.0], np.cumsum(growth)]))
    dates = tuple(quarter_label(q) for q in range(quarters[0] - 1, quarters[-1] + 1))
    return Series(dates, levels)


def _integrate_related_levels(panel: ObservationPanel) -> Series:
    cols = np.flatnonzero(panel.mask[1])
    if cols.size == 0:
        raise ValueError("panel has no related-series observations")
    if np.any(np.diff(cols) != 1):
        raise ValueError("observed related months must be contiguous")
    months = panel.months[cols]
    growth = panel.y[1, cols]
    step_ = 3 if panel.frequency_tags[1] == ROLLING_TAG else 1
    n = cols.size
    levels = np.empty(step_ + n)
    levels[:step_] = _BASE_LEVEL
    for k in range(n):
        levels[step_ + k] = levels[k] * np.exp(growth[k])
    dates = tuple(month_label(m) for m in range(months[0] - step_, months[-1] + 1))
    return Series(dates, levels)


def _as_of_date(step_desc: NowcastStep) -> str:
    timing, month = step_desc.timing.split(" ", 1)
    day = "25" if timing == "late" else "08"
    return f"{month}-{day}"


def make_pseudo_vintages(panel: ObservationPanel, schedule: list) -> list:
    """Fabricate the vintages a release calendar would have produced.

    ``schedule`` is a list of NowcastStep descriptors (typically the
    concatenation of ``nowcast_schedule`` over successive quarters). Each
    vintage holds the integrated level series truncated to that step's
    information set; successive steps therefore nest.
    """
    if not schedule:
        return []
    gdp = _integrate_gdp_levels(panel)
    rel = _integrate_related_levels(panel)
    gdp_last = gdp.start + len(gdp) - 1
    rel_last = rel.start + len(rel) - 1
    out = []
    for step_desc in schedule:
        q_cut = quarter_index(step_desc.gdp_through)
        m_cut = month_index(step_desc.related_through)
        if not (gdp.start < q_cut <= gdp_last):
            raise ValueError(
                f"step {step_desc.step} of {step_desc.target}: GDP through "
                f"{step_desc.gdp_through} outside the panel span"
            )
        if not (rel.start < m_cut <= rel_last):
            raise ValueError(
                f"step {step_desc.step} of {step_desc.target}: related data "
                f"through {step_desc.related_through} outside the panel span"
            )
        n_q = q_cut - gdp.start + 1
        n_m = m_cut - rel.start + 1
        out.append(
            Vintage(
                as_of=_as_of_date(step_desc),
                gdp_levels=Series(gdp.dates[:n_q], gdp.values[:n_q]),
                related_levels=Series(rel.dates[:n_m], rel.values[:n_m]),
            )
        )
    return out
