"""Command-line entry point for the nowcasting pipeline.

Subcommands cover ingestion, estimation, filtering, nowcasting,
backtesting, simulation and plot-data emission. A flat ``key = value``
configuration file can stand in for flags (``--config run.cfg``); flags
given on the command line override file values. All numeric output is
formatted at 9 significant digits, so identical configuration and seed
reproduce byte-identical artifacts.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .asymmetric_t import DistributionFamily
from .copula import CopulaFamily, CopulaSpec
from .data import (
    FLOAT_FMT,
    NowcastStep,
    align_panel,
    fetch_vintages,
    load_vintage,
    load_vintages,
    month_label,
    nowcast_schedule,
    quarter_label,
    write_vintage,
)
from .dynamics import run_filter
from .estimation import estimate
from .evaluation import BacktestConfig, backtest
from .modelspec import MODEL_LABELS, STATE_NAMES, ModelParameters, build_spec
from .nowcast import density_nowcast
from .synthetic import SimulationConfig, make_pseudo_vintages, simulate_panel

__all__ = ["RunConfig", "emit_plot_data", "main", "run"]

_COMMANDS = ("ingest", "estimate", "filter", "nowcast", "backtest", "simulate",
             "plot-data")
_PLOT_KINDS = ("fan_chart", "density", "states", "scores")
_BOOL_KEYS = {"pure-python", "no-warm-start", "loc-common-ar"}
_FINITE_TAIL_FAMILIES = (
    DistributionFamily.STUDENT_T,
    DistributionFamily.SKEW_T,
    DistributionFamily.AST,
)


class _UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """One validated invocation: the command plus everything it may need."""

    command: str
    out: str = "."
    seed: int = 0
    models: tuple = ()
    data: str | None = None
    endpoint: str | None = None
    dates: tuple = ()
    fit: str | None = None
    weight: float = 1.0 / 3.0
    copula: str = "student_t"
    loc_common_ar: bool = False
    quarter: str | None = None
    step: int = 1
    draws: int = 2000
    starts: int = 3
    maxiter: int = 2000
    warm_start: bool = True
    regimes: dict = field(default_factory=dict)
    length: int = 240
    start_month: str = "1990-01"
    quarters: int = 0
    pure_python: bool = False
    artifact: str | None = None
    kind: str | None = None

    def __post_init__(self):
        if self.command not in _COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if not (0.0 < self.weight <= 1.0):
            raise ValueError("weight must lie in (0, 1]")
        self.models = tuple(self.models)
        self.dates = tuple(self.dates)
        self.regimes = {str(k): tuple(v) for k, v in dict(self.regimes).items()}


def _parse_models(text: str) -> tuple:
    labels = tuple(s.strip() for s in text.split(",") if s.strip())
    if not labels:
        raise _UsageError("no model labels given")
    for lab in labels:
        if lab not in MODEL_LABELS:
            raise _UsageError(
                f"unknown model {lab!r}; choose from {', '.join(MODEL_LABELS)}"
            )
    return labels


def _parse_regimes(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise _UsageError(f"regime {item!r} must look like NAME=2020-Q1,2020-Q2")
        name, quarters = item.split("=", 1)
        name = name.strip()
        qs = tuple(q.strip() for q in quarters.split(",") if q.strip())
        if not name or not qs:
            raise _UsageError(f"regime {item!r} must name at least one quarter")
        out[name] = qs
    return out


# ---------------------------------------------------------------------------
# serialization helpers


def _json_ready(obj):
    """Round floats to the shared 9-significant-digit format; NaN/inf -> null."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(FLOAT_FMT % x) if math.isfinite(x) else None
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_json_ready(v) for v in obj]
    return obj


def _write_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_json_ready(payload), fh, indent=2)
        fh.write("\n")
    return path


def _write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _fmt(value) -> str:
    return FLOAT_FMT % float(value)


def _theta_to_dict(theta: ModelParameters) -> dict:
    def tail(x):
        return None if math.isinf(x) else float(x)

    return {
        "initial_state": [float(v) for v in theta.initial_state],
        "prediction_gains": [float(v) for v in theta.prediction_gains],
        "update_gains": [float(v) for v in theta.update_gains],
        "loc_common_ar": float(theta.loc_common_ar),
        "scale_common_ar": float(theta.scale_common_ar),
        "shape_trend_ar": float(theta.shape_trend_ar),
        "shape_common_ar": float(theta.shape_common_ar),
        "loc_loading": float(theta.loc_loading),
        "scale_loading": float(theta.scale_loading),
        "shape_loading": float(theta.shape_loading),
        "gdp_tail": tail(theta.gdp_tail),
        "related_tail": tail(theta.related_tail),
        "copula": {
            "family": theta.copula.family.value,
            "dependence": float(theta.copula.dependence),
            "dof": float(theta.copula.dof),
        },
        "weight": float(theta.weight),
    }


def _theta_from_dict(d: dict) -> ModelParameters:
    def tail(x):
        return math.inf if x is None else float(x)

    cop = d["copula"]
    return ModelParameters(
        initial_state=np.asarray(d["initial_state"], dtype=float),
        prediction_gains=np.asarray(d["prediction_gains"], dtype=float),
        update_gains=np.asarray(d["update_gains"], dtype=float),
        loc_common_ar=float(d["loc_common_ar"]),
        scale_common_ar=float(d["scale_common_ar"]),
        shape_trend_ar=float(d["shape_trend_ar"]),
        shape_common_ar=float(d["shape_common_ar"]),
        loc_loading=float(d["loc_loading"]),
        scale_loading=float(d["scale_loading"]),
        shape_loading=float(d["shape_loading"]),
        gdp_tail=tail(d["gdp_tail"]),
        related_tail=tail(d["related_tail"]),
        copula=CopulaSpec(
            family=CopulaFamily(cop["family"]),
            dependence=float(cop["dependence"]),
            dof=float(cop["dof"]),
        ),
        weight=float(d["weight"]),
    )


def _load_fit(path) -> SimpleNamespace:
    p = Path(path)
    if not p.is_file():
        raise _UsageError(f"fit file not found: {path}")
    doc = json.loads(p.read_text())
    spec = build_spec(
        doc["spec"]["label"],
        copula_family=doc["spec"]["copula_family"],
        loc_common_ar=bool(doc["spec"]["loc_common_ar"]),
    )
    theta = _theta_from_dict(doc["parameters"])
    return SimpleNamespace(estimate=theta, spec=spec, doc=doc)


def _load_vintage_dir(path) -> object:
    p = Path(path)
    if not p.is_dir():
        raise _UsageError(f"vintage directory not found: {path}")
    return load_vintage(p)


# ---------------------------------------------------------------------------
# plot-data emission


def _emit_fan_chart(artifact: Path, out_dir: Path) -> Path:
    with open(artifact, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["model", "quarter", "step", "metric", "value"]:
        raise ValueError(f"{artifact} is not a backtest report CSV")
    cells = {}
    for model, quarter, step, metric, value in rows[1:]:
        cells.setdefault((model, quarter, step), {})[metric] = value
    header = ("model", "quarter", "step", "mean", "lo90", "hi90", "realized")
    out_rows = []
    for (model, quarter, step), metrics in sorted(cells.items()):
        missing = [m for m in ("mean", "lo90", "hi90", "realized") if m not in metrics]
        if missing:
            raise ValueError(
                f"backtest CSV lacks {missing} for ({model}, {quarter}, {step})"
            )
        out_rows.append(
            (model, quarter, step, metrics["mean"], metrics["lo90"],
             metrics["hi90"], metrics["realized"])
        )
    return _write_csv(out_dir / "fan_chart.csv", header, out_rows)


def _emit_density(artifact: Path, out_dir: Path) -> Path:
    doc = json.loads(artifact.read_text())
    try:
        points = doc["grid"]["points"]
        density = doc["grid"]["density"]
    except (KeyError, TypeError):
        raise ValueError(f"{artifact} holds no density grid") from None
    rows = [(_fmt(p), _fmt(d)) for p, d in zip(points, density)]
    return _write_csv(out_dir / "density.csv", ("grid_point", "density"), rows)


def _filter_from_fit(artifact: Path):
    fit = _load_fit(artifact)
    data = fit.doc.get("data")
    if not data:
        raise ValueError(f"{artifact} records no data path to re-run the filter on")
    panel = align_panel(_load_vintage_dir(data), fit.spec)
    res = run_filter(panel, fit.estimate, fit.spec)
    return panel, res


def _states_rows(panel, res) -> list:
    rows = []
    for t, month in enumerate(panel.monthly_index):
        for j, name in enumerate(STATE_NAMES):
            rows.append(
                (month, name, _fmt(res.state_path[t, j]), _fmt(res.filtered_path[t, j]))
            )
    return rows


def _scores_rows(panel, res) -> list:
    rows = []
    for t, month in enumerate(panel.monthly_index):
        for j, name in enumerate(STATE_NAMES):
            rows.append((month, name, _fmt(res.scaled_scores[t, j])))
    return rows


def emit_plot_data(artifact, kind: str, out_dir=".") -> Path:
    """Write the long-format CSV behind one plot kind.

    fan_chart reads a backtest report CSV; density reads a nowcast JSON;
    states and scores re-run the filter recorded in a fit JSON.
    """
    artifact = Path(artifact)
    if not artifact.is_file():
        raise FileNotFoundError(f"artifact not found: {artifact}")
    out = Path(out_dir)
    if kind == "fan_chart":
        return _emit_fan_chart(artifact, out)
    if kind == "density":
        return _emit_density(artifact, out)
    if kind == "states":
        panel, res = _filter_from_fit(artifact)
        header = ("month", "state", "predicted", "filtered")
        return _write_csv(out / "states.csv", header, _states_rows(panel, res))
    if kind == "scores":
        panel, res = _filter_from_fit(artifact)
        return _write_csv(out / "scores.csv", ("month", "state", "score"),
                          _scores_rows(panel, res))
    raise ValueError(f"unknown plot-data kind {kind!r}")


# ---------------------------------------------------------------------------
# command handlers


def _cmd_ingest(cfg: RunConfig) -> int:
    out = Path(cfg.out) / "vintages"
    if cfg.endpoint:
        if not cfg.dates:
            raise _UsageError("--endpoint needs --dates")
        vintages, errors = fetch_vintages(cfg.endpoint, cfg.dates)
    elif cfg.data:
        root = Path(cfg.data)
        if not root.is_dir():
            raise _UsageError(f"vintage root not found: {cfg.data}")
        vintages, errors = load_vintages(root), []
    else:
        raise _UsageError("ingest needs --endpoint or --data")
    for v in vintages:
        write_vintage(out, v)
    manifest = {
        "written": [v.as_of for v in vintages],
        "errors": list(errors),
    }
    path = _write_json(Path(cfg.out) / "ingest.json", manifest)
    print(f"ingested {len(vintages)} vintage(s) into {out} ({len(errors)} error(s))")
    print(f"wrote {path}")
    if not vintages:
        raise RuntimeError("no vintages ingested: " + "; ".join(errors))
    return 0


def _spec_for(cfg: RunConfig, label: str):
    return build_spec(label, copula_family=cfg.copula, loc_common_ar=cfg.loc_common_ar)


def _cmd_estimate(cfg: RunConfig) -> int:
    vintage = _load_vintage_dir(cfg.data)
    out = Path(cfg.out)
    force = True if cfg.pure_python else None
    for label in cfg.models:
        spec = _spec_for(cfg, label)
        panel = align_panel(vintage, spec)
        fit = estimate(
            panel,
            spec,
            weight=cfg.weight,
            seed=cfg.seed,
            n_starts=cfg.starts,
            maxiter=cfg.maxiter,
            force_python=force,
        )
        summary = fit.summary()
        payload = {
            "summary": summary,
            "spec": {
                "label": spec.label,
                "copula_family": spec.copula_family.value,
                "loc_common_ar": spec.loc_common_ar,
            },
            "weight": cfg.weight,
            "data": str(cfg.data),
            "seed": cfg.seed,
            "n_starts": cfg.starts,
            "convergence": fit.convergence,
            "parameters": _theta_to_dict(fit.estimate),
        }
        path = _write_json(out / f"fit_{label}.json", payload)
        dof = summary["copula_dof"]
        print(
            f"{label}: total={_fmt(summary['total_loglik'])} "
            f"indep={_fmt(summary['independence_loglik'])} "
            f"gdp={_fmt(summary['gdp_loglik'])} "
            f"dep={_fmt(summary['dependence'])} "
            f"dof={'-' if dof is None else _fmt(dof)} "
            f"aic={_fmt(summary['aic'])} bic={_fmt(summary['bic'])}"
        )
        print(f"wrote {path}")
    return 0


def _cmd_filter(cfg: RunConfig) -> int:
    fit = _load_fit(cfg.fit)
    data = cfg.data or fit.doc.get("data")
    if not data:
        raise _UsageError("filter needs --data (fit file records no data path)")
    panel = align_panel(_load_vintage_dir(data), fit.spec)
    res = run_filter(panel, fit.estimate, fit.spec,
                     force_python=True if cfg.pure_python else None)
    out = Path(cfg.out)
    states = _write_csv(out / "states.csv",
                        ("month", "state", "predicted", "filtered"),
                        _states_rows(panel, res))
    scores = _write_csv(out / "scores.csv", ("month", "state", "score"),
                        _scores_rows(panel, res))
    weight = fit.estimate.weight
    summary = {
        "ok": res.ok,
        "bad_index": res.bad_index,
        "weighted_loglik": float(res.weighted_loglik(weight)),
        "copula_loglik": float(np.sum(res.loglik_copula)),
        "weight": weight,
        "n_months": panel.n_months,
    }
    path = _write_json(out / "filter.json", summary)
    print(f"filter pass ok={res.ok} weighted loglik={_fmt(summary['weighted_loglik'])}")
    for p in (states, scores, path):
        print(f"wrote {p}")
    return 0


def _cmd_nowcast(cfg: RunConfig) -> int:
    if not cfg.quarter:
        raise _UsageError("nowcast needs --quarter")
    fit = _load_fit(cfg.fit)
    data = cfg.data or fit.doc.get("data")
    if not data:
        raise _UsageError("nowcast needs --data (fit file records no data path)")
    panel = align_panel(_load_vintage_dir(data), fit.spec)
    d = density_nowcast(
        fit,
        panel,
        cfg.quarter,
        cfg.step,
        n_draws=cfg.draws,
        seed=cfg.seed,
        force_python=True if cfg.pure_python else None,
    )
    out = Path(cfg.out)
    stem = f"nowcast_{cfg.quarter}_step{cfg.step}"
    points, density = d.grid
    grid_csv = _write_csv(
        out / f"{stem}.csv",
        ("grid_point", "density"),
        [(_fmt(p), _fmt(v)) for p, v in zip(points, density)],
    )
    payload = {
        "target": d.target,
        "step": d.step,
        "mean": d.mean,
        "n_draws": d.n_draws,
        "seed": d.seed,
        "percentiles": {
            f"{int(round(cov * 100))}": [lo, hi]
            for cov, (lo, hi) in sorted(d.percentiles.items())
        },
        "grid": {"points": list(points), "density": list(density)},
    }
    path = _write_json(out / f"{stem}.json", payload)
    lo, hi = d.percentiles[max(d.percentiles)]
    print(
        f"{d.target} step {d.step}: mean={_fmt(d.mean)} "
        f"band=[{_fmt(lo)}, {_fmt(hi)}] from {d.n_draws} draws"
    )
    for p in (grid_csv, path):
        print(f"wrote {p}")
    return 0


def _cmd_backtest(cfg: RunConfig) -> int:
    root = Path(cfg.data) if cfg.data else None
    if root is None or not root.is_dir():
        raise _UsageError(f"vintage root not found: {cfg.data}")
    vintages = load_vintages(root)
    specs = [_spec_for(cfg, label) for label in cfg.models]
    config = BacktestConfig(
        n_draws=cfg.draws,
        n_starts=cfg.starts,
        warm_start=cfg.warm_start,
        weight=cfg.weight,
        regimes=cfg.regimes,
        maxiter=cfg.maxiter,
        force_python=True if cfg.pure_python else None,
    )
    report = backtest(vintages, specs, config, seed=cfg.seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "backtest.csv")
    _write_json(out / "backtest.json", report.summary())
    print(
        f"scored {len(report.cells)} cell(s); {len(report.failures)} failure(s); "
        f"{len(report.pending)} pending"
    )
    for (model, step, regime), vals in sorted(report.aggregates.items()):
        print(
            f"  {model} step {step} [{regime}]: "
            f"avg log score={_fmt(vals['avg_log_score'])} "
            f"mae={_fmt(vals['mae'])} n={vals['n_quarters']}"
        )
    print(f"wrote {out / 'backtest.csv'}")
    print(f"wrote {out / 'backtest.json'}")
    if not report.cells and report.failures:
        raise RuntimeError("every cell failed to estimate")
    return 0


def _demo_theta(spec) -> ModelParameters:
    """A stable, stationary data generating process for the simulate command."""
    z0 = np.zeros(9)
    z0[0], z0[1], z0[3], z0[4] = 0.3, 0.1, -0.2, 0.1
    gains = np.zeros(9)
    gains[0:3] = (0.02, 0.03, 0.06)
    if spec.dynamic_scale:
        gains[3:6] = (0.02, 0.02, 0.04)
    if spec.dynamic_shape:
        gains[6:9] = (0.004, 0.004, 0.008)
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
        gdp_tail=8.0 if spec.gdp_family in _FINITE_TAIL_FAMILIES else math.inf,
        related_tail=8.0 if spec.related_family in _FINITE_TAIL_FAMILIES else math.inf,
    )
    if spec.copula_family is CopulaFamily.STUDENT_T:
        theta.copula = CopulaSpec(CopulaFamily.STUDENT_T, 0.5, 8.0)
    elif spec.copula_family is CopulaFamily.GAUSSIAN:
        theta.copula = CopulaSpec(CopulaFamily.GAUSSIAN, 0.5)
    return theta


def _cmd_simulate(cfg: RunConfig) -> int:
    if len(cfg.models) != 1:
        raise _UsageError("simulate takes exactly one --model label")
    spec = _spec_for(cfg, cfg.models[0])
    theta = _demo_theta(spec)
    sim = SimulationConfig(theta, spec, length=cfg.length, seed=cfg.seed,
                           start_month=cfg.start_month)
    panel, _states = simulate_panel(sim)

    gdp_cols = np.flatnonzero(panel.mask[0])
    rel_cols = np.flatnonzero(panel.mask[1])
    gq = int(panel.months[gdp_cols[-1]]) // 3
    lm = int(panel.months[rel_cols[-1]])
    # dated "late" in the month after the panel so it never collides with
    # the step-1 vintage of the last scheduled quarter (an "early" date)
    full = NowcastStep(
        step=1,
        target=quarter_label(gq + 1),
        timing=f"late {month_label(lm + 1)}",
        related_through=month_label(lm),
        gdp_through=quarter_label(gq),
    )
    schedule = []
    if cfg.quarters > 0:
        for q in range(gq - cfg.quarters + 1, gq + 1):
            schedule.extend(nowcast_schedule(quarter_label(q)))
    vintages = make_pseudo_vintages(panel, schedule + [full])
    out = Path(cfg.out)
    root = out / "vintages"
    for v in vintages:
        write_vintage(root, v)
    manifest = {
        "model": spec.label,
        "length": cfg.length,
        "seed": cfg.seed,
        "start_month": cfg.start_month,
        "vintages": [v.as_of for v in vintages],
        "parameters": _theta_to_dict(theta),
    }
    path = _write_json(out / "simulate.json", manifest)
    print(
        f"simulated {panel.n_months} months of {spec.label}; "
        f"wrote {len(vintages)} vintage(s) into {root}"
    )
    print(f"full-sample vintage: {root / vintages[-1].as_of}")
    print(f"wrote {path}")
    return 0


def _cmd_plot_data(cfg: RunConfig) -> int:
    if not cfg.artifact or not cfg.kind:
        raise _UsageError("plot-data needs --artifact and --kind")
    try:
        path = emit_plot_data(cfg.artifact, cfg.kind, cfg.out)
    except FileNotFoundError as exc:
        raise _UsageError(str(exc)) from None
    print(f"wrote {path}")
    return 0


_HANDLERS = {
    "ingest": _cmd_ingest,
    "estimate": _cmd_estimate,
    "filter": _cmd_filter,
    "nowcast": _cmd_nowcast,
    "backtest": _cmd_backtest,
    "simulate": _cmd_simulate,
    "plot-data": _cmd_plot_data,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_common(p):
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")


def _add_model_flags(p, many: bool):
    noun = "comma-separated model labels" if many else "model label"
    p.add_argument("--model", required=True, help=f"{noun}: {', '.join(MODEL_LABELS)}")
    p.add_argument(
        "--copula",
        choices=[f.value for f in CopulaFamily],
        default=CopulaFamily.STUDENT_T.value,
        help="copula family (default: student_t)",
    )
    p.add_argument(
        "--loc-common-ar",
        action="store_true",
        help="mean-reverting common location factor instead of a unit root",
    )


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="skewcast",
        description="Bivariate mixed-frequency score-driven GDP density nowcasting.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command",
                                parser_class=_Parser)

    p = sub.add_parser("ingest",
                       help="fetch or copy data vintages into a local store")
    _add_common(p)
    p.add_argument("--endpoint",
                   help="URL template with {date} and {series} placeholders")
    p.add_argument("--dates", help="comma-separated as-of dates for --endpoint")
    p.add_argument("--data", help="local vintage root to copy instead of fetching")

    p = sub.add_parser("estimate",
                       help="fit models to one vintage by weighted maximum likelihood")
    _add_common(p)
    _add_model_flags(p, many=True)
    p.add_argument("--data", required=True, help="vintage directory (YYYY-MM-DD)")
    p.add_argument("--weight", type=float, default=1.0 / 3.0,
                   help="related-series likelihood weight W in (0,1] (default: 1/3)")
    p.add_argument("--starts", type=int, default=3,
                   help="multi-start count (default: 3)")
    p.add_argument("--maxiter", type=int, default=2000,
                   help="optimizer iteration cap (default: 2000)")
    p.add_argument("--pure-python", action="store_true",
                   help="force the pure-Python filter core")

    p = sub.add_parser("filter",
                       help="run the filter from a fit and emit state paths")
    _add_common(p)
    p.add_argument("--fit", required=True, help="fit JSON from the estimate command")
    p.add_argument("--data", help="vintage directory (default: path in the fit file)")
    p.add_argument("--pure-python", action="store_true",
                   help="force the pure-Python filter core")

    p = sub.add_parser("nowcast",
                       help="simulate the GDP density for one target quarter")
    _add_common(p)
    p.add_argument("--fit", required=True, help="fit JSON from the estimate command")
    p.add_argument("--data", help="vintage directory (default: path in the fit file)")
    p.add_argument("--quarter", required=True, help="target quarter, e.g. 2020-Q1")
    p.add_argument("--step", type=int, choices=(1, 2, 3, 4), default=1,
                   help="nowcast step label recorded with the output (default: 1)")
    p.add_argument("--draws", type=int, default=10000,
                   help="simulation draw count (default: 10000)")
    p.add_argument("--pure-python", action="store_true",
                   help="force the pure-Python filter core")

    p = sub.add_parser("backtest",
                       help="pseudo real-time backtest over a vintage store")
    _add_common(p)
    _add_model_flags(p, many=True)
    p.add_argument("--data", required=True, help="root directory of vintages")
    p.add_argument("--weight", type=float, default=1.0 / 3.0,
                   help="related-series likelihood weight W in (0,1] (default: 1/3)")
    p.add_argument("--draws", type=int, default=2000,
                   help="draws per nowcast (default: 2000)")
    p.add_argument("--starts", type=int, default=3,
                   help="multi-start count per re-estimation (default: 3)")
    p.add_argument("--maxiter", type=int, default=2000,
                   help="optimizer iteration cap (default: 2000)")
    p.add_argument("--no-warm-start", action="store_true",
                   help="re-estimate each vintage from scratch")
    p.add_argument("--regime", action="append", metavar="NAME=Q1,Q2",
                   help="named quarter list to aggregate separately; repeatable")
    p.add_argument("--pure-python", action="store_true",
                   help="force the pure-Python filter core")

    p = sub.add_parser("simulate",
                       help="simulate a synthetic panel and export vintages")
    _add_common(p)
    _add_model_flags(p, many=False)
    p.add_argument("--length", type=int, default=240,
                   help="panel length in months (default: 240)")
    p.add_argument("--start-month", default="1990-01",
                   help="first month of the panel (default: 1990-01)")
    p.add_argument("--quarters", type=int, default=0,
                   help="also emit the 4-step vintage sequence for the last N quarters")

    p = sub.add_parser("plot-data",
                       help="emit long-format CSV behind one plot kind")
    _add_common(p)
    p.add_argument("--artifact", required=True,
                   help="backtest CSV (fan_chart), nowcast JSON (density) or "
                        "fit JSON (states, scores)")
    p.add_argument("--kind", required=True, choices=_PLOT_KINDS,
                   help="which plot data to emit")

    return parser


def _config_tokens(path: str) -> list:
    p = Path(path)
    if not p.is_file():
        raise _UsageError(f"config file not found: {path}")
    tokens = []
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-").lower()
        if not key:
            raise _UsageError(f"{path}:{lineno}: empty key")
        if key in _BOOL_KEYS:
            if value.lower() in ("true", "yes", "on", "1"):
                tokens.append(f"--{key}")
            elif value.lower() in ("false", "no", "off", "0"):
                pass
            else:
                raise _UsageError(f"{path}:{lineno}: {key} must be a boolean")
        else:
            if not value:
                raise _UsageError(f"{path}:{lineno}: empty value for {key}")
            tokens.extend([f"--{key}", value])
    return tokens


def _expand_config(argv: list) -> list:
    """Splice config-file tokens in front of the explicit flags."""
    if not argv or argv[0].startswith("-"):
        return argv
    command, rest = argv[0], argv[1:]
    path = None
    kept = []
    i = 0
    while i < len(rest):
        tok = rest[i]
        if tok == "--config":
            if i + 1 >= len(rest):
                raise _UsageError("--config needs a path")
            path = rest[i + 1]
            i += 2
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            i += 1
        else:
            kept.append(tok)
            i += 1
    if path is None:
        return argv
    return [command] + _config_tokens(path) + kept


def _runconfig(args: argparse.Namespace) -> RunConfig:
    get = lambda name, default: getattr(args, name, default)  # noqa: E731
    models = ()
    if get("model", None):
        models = _parse_models(args.model)
    dates = ()
    if get("dates", None):
        dates = tuple(s.strip() for s in args.dates.split(",") if s.strip())
    try:
        return RunConfig(
            command=args.command,
            out=get("out", "."),
            seed=get("seed", 0),
            models=models,
            data=get("data", None),
            endpoint=get("endpoint", None),
            dates=dates,
            fit=get("fit", None),
            weight=get("weight", 1.0 / 3.0),
            copula=get("copula", CopulaFamily.STUDENT_T.value),
            loc_common_ar=get("loc_common_ar", False),
            quarter=get("quarter", None),
            step=get("step", 1),
            draws=get("draws", 2000),
            starts=get("starts", 3),
            maxiter=get("maxiter", 2000),
            warm_start=not get("no_warm_start", False),
            regimes=_parse_regimes(get("regime", None)),
            length=get("length", 240),
            start_month=get("start_month", "1990-01"),
            quarters=get("quarters", 0),
            pure_python=get("pure_python", False),
            artifact=get("artifact", None),
            kind=get("kind", None),
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def run(argv=None) -> int:
    """Execute one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _expand_config(argv)
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _HANDLERS[args.command](_runconfig(args))
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary: report and signal failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())
