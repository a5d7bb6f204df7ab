"""Simulation-based density nowcasts over the ragged edge.

The filter runs deterministically up to the panel's ragged edge (interior
holes and log-difference warm-up gaps are skipped with no update, exactly
as in estimation); from the edge onward, each draw fills the unobserved
entries from the fitted one-step-ahead joint density (copula pair when
both series are missing at a month, marginal otherwise) and advances the
recursion on the drawn data. At the target quarter's end month the
within-period filtering step absorbs the related series' value, and the
recorded GDP draw comes from the filtered conditional density through an
independent uniform, so cross-series dependence enters the nowcast only
through the state update.

Draws use independent substreams spawned from the seed per draw index,
making results reproducible under any execution order; the lockstep
vectorization across draws is an implementation detail.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import asymmetric_t
from .copula import copula_sample
from .data import ObservationPanel, quarter_end_month, quarter_index
from .dynamics import (
    build_transition,
    init_buffers,
    link_jacobian,
    link_parameters,
    push_buffers,
    quasi_score,
    run_filter,
    step as filter_step,
)

__all__ = ["DensityNowcast", "density_nowcast", "interval", "point_nowcast"]

_GRID_SIZE = 512
_DEFAULT_COVERAGES = (0.5, 0.9)


@dataclass
class DensityNowcast:
    """Empirical GDP density for one (target, step) cell."""

    target: str
    step: int
    draws: np.ndarray
    grid: tuple
    mean: float
    percentiles: dict
    n_draws: int
    seed: int

    def __post_init__(self):
        points, density = self.grid
        points = np.asarray(points, dtype=float)
        density = np.asarray(density, dtype=float)
        if points.shape != density.shape or points.ndim != 1:
            raise ValueError("grid points and density must be matching vectors")
        if np.any(np.diff(points) <= 0.0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(density < 0.0):
            raise ValueError("grid density must be non-negative")
        total = float(np.trapezoid(density, points))
        if abs(total - 1.0) > 1e-2:
            raise ValueError(f"grid density integrates to {total:.4f}, not 1")
        self.grid = (points, density)
        last = None
        for cov in sorted(self.percentiles):
            lo, hi = self.percentiles[cov]
            if lo > hi:
                raise ValueError("percentile bands must have lo <= hi")
            if last is not None and (lo > last[0] or hi < last[1]):
                raise ValueError("percentile bands must nest with coverage")
            last = (lo, hi)


def _silverman_kde(draws: np.ndarray) -> tuple:
    """Gaussian kernel density on a fixed grid spanning draws +- 4 IQR."""
    n = draws.size
    std = float(np.std(draws))
    q25, q75 = np.quantile(draws, [0.25, 0.75])
    iqr = float(q75 - q25)
    scale = min(std, iqr / 1.34) if iqr > 0.0 else std
    if scale <= 0.0:
        scale = max(abs(float(draws[0])) * 1e-3, 1e-9)
    h = 0.9 * scale * n ** (-0.2)
    pad = 4.0 * iqr if iqr > 0.0 else 4.0 * scale
    lo = float(np.min(draws)) - pad
    hi = float(np.max(draws)) + pad
    points = np.linspace(lo, hi, _GRID_SIZE)
    density = np.empty(_GRID_SIZE)
    norm = 1.0 / (h * np.sqrt(2.0 * np.pi))
    for j in range(_GRID_SIZE):
        u = (points[j] - draws) / h
        density[j] = norm * float(np.mean(np.exp(-0.5 * u * u)))
    return points, density


def _draw_uniforms(seed: int, n_draws: int, n_months: int, cop) -> tuple:
    """Per-draw substreams: copula pairs for each simulated month plus the
    target-stage uniform, reproducible independently of execution order."""
    pairs = np.empty((n_draws, n_months, 2))
    target_u = np.empty(n_draws)
    children = np.random.SeedSequence(seed).spawn(n_draws)
    for d, child in enumerate(children):
        rng = np.random.default_rng(child)
        if n_months:
            pairs[d] = copula_sample(n_months, cop, rng)
        target_u[d] = rng.uniform()
    # keep strictly inside (0, 1) for the quantile transforms
    eps = np.finfo(float).tiny
    np.clip(pairs, eps, 1.0 - 1e-16, out=pairs)
    np.clip(target_u, eps, 1.0 - 1e-16, out=target_u)
    return pairs, target_u


def density_nowcast(
    fit,
    panel: ObservationPanel,
    target: str,
    step: int,
    n_draws: int = 10_000,
    seed: int = 0,
    coverages: tuple = _DEFAULT_COVERAGES,
    force_python: bool | None = None,
) -> DensityNowcast:
    """Simulate the GDP density for ``target`` given the panel's ragged edge.

    ``panel`` must already reflect the information set of the step;
    ``step`` is recorded as metadata. ``fit`` provides the estimate and
    spec (an object with ``estimate`` and ``spec`` attributes).
    """
    theta = fit.estimate
    spec = fit.spec
    if n_draws < 1:
        raise ValueError("n_draws must be at least 1")
    t_end = quarter_end_month(quarter_index(target))
    months = panel.months
    horizon = 6  # months the simulation may extend past the panel's edge
    if t_end > months[-1] + horizon or t_end < months[0]:
        raise ValueError(
            f"target {target} ends more than {horizon} months past the "
            "panel's ragged edge"
        )
    t_pos = int(t_end - months[0])
    n_ext = max(panel.n_months, t_pos + 1)
    y = np.full((2, n_ext), np.nan)
    mask = np.zeros((2, n_ext), dtype=np.uint8)
    y[:, : panel.n_months] = panel.y
    mask[:, : panel.n_months] = panel.mask
    months = np.arange(months[0], months[0] + n_ext)
    if mask[0, t_pos]:
        raise ValueError(f"GDP for {target} is already observed in the panel")

    is_qe = months % 3 == 2
    # the deterministic prefix ends at the ragged edge: the first month past
    # either series' last observation (interior holes and log-diff warm-up
    # gaps stay inside the prefix, where the filter skips them with no
    # update rather than simulating them)
    rel_obs = np.flatnonzero(mask[1] == 1)
    gdp_obs = np.flatnonzero(mask[0] == 1)
    rel_edge = int(rel_obs[-1]) if rel_obs.size else -1
    gdp_edge = int(gdp_obs[-1]) if gdp_obs.size else -1
    qe_after = np.flatnonzero(is_qe & (np.arange(n_ext) > gdp_edge))
    qe_first = int(qe_after[0]) if qe_after.size else t_pos
    t0 = min(rel_edge + 1, qe_first, t_pos)

    trans = build_transition(theta, spec)
    if t0 > 0:
        prefix = SimpleNamespace(y=y[:, :t0], mask=mask[:, :t0])
        res = run_filter(prefix, theta, spec, force_python=force_python)
        if not res.ok:
            raise RuntimeError(
                f"filter failed on the observed prefix at month index {res.bad_index}"
            )
        z0 = res.final_state
        buf0 = res.buffers
    else:
        z0 = theta.initial_state
        buf0 = init_buffers(theta, spec)

    n_months = t_pos - t0 + 1
    pairs, target_u = _draw_uniforms(seed, n_draws, n_months, theta.copula)

    z = np.broadcast_to(z0, (n_draws, 9)).copy()
    buffers = init_buffers(theta, spec, lead_shape=(n_draws,))
    buffers.loc[...] = buf0.loc
    buffers.scale_sq[...] = buf0.scale_sq

    for k, t in enumerate(range(t0, t_pos)):
        p1, p2 = link_parameters(z, theta, spec, buffers)
        d1 = bool(is_qe[t])
        d2 = True
        if mask[1, t]:
            y2 = np.full(n_draws, y[1, t])
        else:
            y2 = np.asarray(asymmetric_t.quantile(pairs[:, k, 1], p2))
        if d1:
            if mask[0, t]:
                y1 = np.full(n_draws, y[0, t])
            else:
                y1 = np.asarray(asymmetric_t.quantile(pairs[:, k, 0], p1))
        else:
            y1 = np.zeros(n_draws)
        chain = link_jacobian(z, theta, spec, buffers)
        scored = quasi_score(
            np.stack([y1, y2], axis=-1), (p1, p2), np.array([d1, d2]), chain
        )
        _, predicted = filter_step(z, scored, trans)
        push_buffers(buffers, z, theta)
        z = predicted

    # target stage: update on the related series, then draw GDP from the
    # filtered conditional density through an independent uniform
    p1, p2 = link_parameters(z, theta, spec, buffers)
    if mask[1, t_pos]:
        y2 = np.full(n_draws, y[1, t_pos])
    else:
        y2 = np.asarray(asymmetric_t.quantile(pairs[:, -1, 1], p2))
    chain = link_jacobian(z, theta, spec, buffers)
    scored = quasi_score(
        np.stack([np.zeros(n_draws), y2], axis=-1),
        (p1, p2),
        np.array([False, True]),
        chain,
    )
    filtered, _ = filter_step(z, scored, trans)
    p1f, _ = link_parameters(filtered, theta, spec, buffers)
    draws = np.asarray(asymmetric_t.quantile(target_u, p1f), dtype=float)
    bad = ~np.isfinite(draws)
    if np.any(bad):
        raise RuntimeError(
            f"{int(bad.sum())} of {n_draws} nowcast draws diverged; the fitted "
            "dynamics are unstable over the simulated span"
        )

    points, density = _silverman_kde(draws)
    percentiles = {}
    for cov in coverages:
        lo_q = (1.0 - cov) / 2.0
        lo, hi = np.quantile(draws, [lo_q, 1.0 - lo_q])
        percentiles[float(cov)] = (float(lo), float(hi))
    return DensityNowcast(
        target=target,
        step=int(step),
        draws=draws,
        grid=(points, density),
        mean=float(np.mean(draws)),
        percentiles=percentiles,
        n_draws=int(n_draws),
        seed=int(seed),
    )


def point_nowcast(d: DensityNowcast) -> float:
    """The conditional mean; under skew it sits away from the location."""
    return d.mean


def interval(d: DensityNowcast, coverage: float = 0.90) -> tuple:
    """Equal-tail percentile band at the given coverage."""
    if not (0.0 <= coverage < 1.0):
        raise ValueError("coverage must lie in [0, 1)")
    lo_q = (1.0 - coverage) / 2.0
    lo, hi = np.quantile(d.draws, [lo_q, 1.0 - lo_q])
    return float(lo), float(hi)
