"""Density and point nowcast scoring and the pseudo real-time backtest.

The backtest walks a sorted list of data vintages. Each vintage defines
one information set: the open target quarter is the one after the last
released GDP figure, and the nowcast step follows from how many months
of the target quarter the related series already covers (none = step 4,
all three = step 1). Models are re-estimated on every vintage, optionally
warm-started from the previous fit, and the density nowcast for the open
quarter is scored against the first release of that quarter, taken from
the earliest subsequent vintage that contains it. Later revisions are
never used.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .data import align_panel, log_diff, quarter_end_month, quarter_index, quarter_label
from .estimation import EstimationError, estimate
from .nowcast import density_nowcast, DensityNowcast

__all__ = [
    "BacktestCell",
    "BacktestConfig",
    "BacktestReport",
    "backtest",
    "log_score",
    "mae",
]

_SCORE_FLOOR = 1e-12


def log_score(d: DensityNowcast, realized: float) -> float:
    """Log of the nowcast density at the realized value.

    The grid density is interpolated linearly; outside the grid it is
    zero, and the score is floored at ``log(1e-12)`` so a single missed
    outlier cannot produce an infinite penalty.
    """
    realized = float(realized)
    if not np.isfinite(realized):
        raise ValueError("realized value must be finite")
    points, density = d.grid
    val = float(np.interp(realized, points, density, left=0.0, right=0.0))
    return float(np.log(max(val, _SCORE_FLOOR)))


def mae(points, realized) -> float:
    """Mean absolute error between paired point nowcasts and outcomes."""
    p = np.asarray(points, dtype=float)
    r = np.asarray(realized, dtype=float)
    if p.ndim != 1 or p.shape != r.shape:
        raise ValueError("points and realized must be equal-length vectors")
    if p.size < 1:
        raise ValueError("need at least one (point, realized) pair")
    return float(np.mean(np.abs(p - r)))


@dataclass
class BacktestConfig:
    """Knobs for the backtest driver.

    ``regimes`` maps a name to the quarter labels it covers; every regime
    is reported alongside the always-present "all" aggregate. Quarters
    appearing in no regime simply do not contribute to that split.
    """

    n_draws: int = 2000
    n_starts: int = 3
    warm_start: bool = True
    weight: float = 1.0 / 3.0
    regimes: dict = field(default_factory=dict)
    maxiter: int = 2000
    force_python: bool | None = None

    def __post_init__(self):
        if self.n_draws < 1:
            raise ValueError("n_draws must be at least 1")
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        if not (0.0 < self.weight):
            raise ValueError("weight must be positive")
        clean = {}
        for name, quarters in dict(self.regimes).items():
            quarters = tuple(quarters)
            for q in quarters:
                quarter_index(q)
            if name == "all":
                raise ValueError('"all" is reserved for the full-sample aggregate')
            clean[str(name)] = quarters
        self.regimes = clean


@dataclass(frozen=True)
class BacktestCell:
    """One scored nowcast: a (model, quarter, step) entry of the report."""

    model: str
    quarter: str
    step: int
    as_of: str
    mean: float
    lo90: float
    hi90: float
    realized: float
    log_score: float
    abs_error: float


_CELL_METRICS = ("log_score", "abs_error", "mean", "lo90", "hi90", "realized")


@dataclass
class BacktestReport:
    """Scored cells plus aggregates that are exact means of the cells."""

    cells: tuple
    regimes: dict
    failures: tuple = ()
    pending: tuple = ()
    aggregates: dict = field(init=False)

    def __post_init__(self):
        self.cells = tuple(self.cells)
        self.regimes = {str(k): tuple(v) for k, v in dict(self.regimes).items()}
        self.failures = tuple(self.failures)
        self.pending = tuple(self.pending)
        self.aggregates = self._aggregate()

    def _aggregate(self) -> dict:
        splits = {"all": None}
        splits.update(self.regimes)
        out = {}
        for name, quarters in splits.items():
            qset = None if quarters is None else set(quarters)
            groups = {}
            for c in self.cells:
                if qset is not None and c.quarter not in qset:
                    continue
                groups.setdefault((c.model, c.step), []).append(c)
            for (model, step), cs in groups.items():
                out[(model, step, name)] = {
                    "avg_log_score": float(np.mean([c.log_score for c in cs])),
                    "mae": float(np.mean([c.abs_error for c in cs])),
                    "n_quarters": len(cs),
                }
        return out

    def to_rows(self) -> list:
        """Long-format rows: (model, quarter, step, metric, value)."""
        rows = [("model", "quarter", "step", "metric", "value")]
        for c in self.cells:
            for m in _CELL_METRICS:
                rows.append(
                    (c.model, c.quarter, str(c.step), m, format(getattr(c, m), ".9g"))
                )
        return rows

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(self.to_rows())

    def summary(self) -> dict:
        return {
            "models": sorted({c.model for c in self.cells}),
            "n_cells": len(self.cells),
            "regimes": {k: list(v) for k, v in self.regimes.items()},
            "aggregates": [
                {"model": m, "step": s, "regime": r, **vals}
                for (m, s, r), vals in sorted(self.aggregates.items())
            ],
            "failures": [
                {"model": m, "as_of": a, "error": e} for (m, a, e) in self.failures
            ],
            "pending": [{"as_of": a, "quarter": q} for (a, q) in self.pending],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def _first_releases(vintages: list) -> dict:
    """Quarter index -> growth rate from the earliest vintage containing it."""
    out = {}
    for v in vintages:
        growth = log_diff(v.gdp_levels.values, 1)
        for k, val in enumerate(growth):
            if np.isfinite(val):
                out.setdefault(v.gdp_levels.start + k, float(val))
    return out


def _open_target(v) -> int:
    """The quarter after the last GDP figure released in the vintage."""
    return v.gdp_levels.start + len(v.gdp_levels)


def _implied_step(v, target_qi: int) -> int:
    """4 minus the number of target-quarter months the related series covers."""
    m1 = quarter_end_month(target_qi) - 2
    rel_last = v.related_levels.start + len(v.related_levels) - 1
    covered = min(max(rel_last - m1 + 1, 0), 3)
    return 4 - covered


def backtest(vintages: list, specs: list, config: BacktestConfig | None = None,
             seed: int = 0) -> BacktestReport:
    """Run the pseudo real-time exercise over a vintage collection.

    Each (vintage, model) cell is independent given the warm-start chain;
    draws use a seed derived from (seed, vintage index, model index), so
    the report is reproducible regardless of evaluation order. A vintage
    whose open quarter has no first release yet is recorded as pending; a
    model that fails to estimate on a vintage is recorded as a failure and
    that quarter is skipped in its aggregates.
    """
    if config is None:
        config = BacktestConfig()
    vs = sorted(vintages, key=lambda v: v.as_of)
    if len(vs) < 2:
        raise ValueError("backtest needs at least 2 vintages")
    if not specs:
        raise ValueError("backtest needs at least one model spec")
    first_release = _first_releases(vs)

    warm = [None] * len(specs)
    cells = {}
    failures = []
    pending = []
    for iv, v in enumerate(vs):
        q_open = _open_target(v)
        target = quarter_label(q_open)
        realized = first_release.get(q_open)
        if realized is None:
            pending.append((v.as_of, target))
            continue
        step = _implied_step(v, q_open)
        for im, spec in enumerate(specs):
            panel = align_panel(v, spec)
            try:
                fit = estimate(
                    panel,
                    spec,
                    weight=config.weight,
                    seed=seed,
                    n_starts=config.n_starts,
                    maxiter=config.maxiter,
                    warm_start=warm[im] if config.warm_start else None,
                    force_python=config.force_python,
                )
            except EstimationError as exc:
                failures.append((spec.label, v.as_of, str(exc)))
                continue
            if config.warm_start:
                warm[im] = fit.estimate
            cell_seed = int(
                np.random.SeedSequence([seed, iv, im]).generate_state(1)[0]
            )
            d = density_nowcast(
                fit,
                panel,
                target,
                step,
                n_draws=config.n_draws,
                seed=cell_seed,
                force_python=config.force_python,
            )
            lo90, hi90 = d.percentiles[0.9]
            cells[(spec.label, target, step)] = BacktestCell(
                model=spec.label,
                quarter=target,
                step=step,
                as_of=v.as_of,
                mean=d.mean,
                lo90=float(lo90),
                hi90=float(hi90),
                realized=realized,
                log_score=log_score(d, realized),
                abs_error=abs(d.mean - realized),
            )
    ordered = tuple(cells[k] for k in sorted(cells))
    return BacktestReport(
        cells=ordered,
        regimes=config.regimes,
        failures=tuple(failures),
        pending=tuple(pending),
    )
