"""Weighted maximum-likelihood estimation of the model parameters.

The free-parameter set is derived mechanically from the ModelSpec: initial
values of the four random-walk trends, prediction gains of each active
block, AR coefficients of the stationary components, related-series
loadings, per-series tail parameters when the family frees them, and the
copula parameters. Everything is optimized in an unconstrained transformed
space (log for gains, atanh for correlations and AR coefficients, shifted
log for tails and copula degrees of freedom).

The objective down-weights the monthly related series' marginal
contribution by W (one third by default) so it cannot dominate the
quarterly GDP likelihood; the copula term is never weighted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .copula import CopulaFamily, CopulaSpec
from .dynamics import run_filter
from .modelspec import ModelParameters, ModelSpec, N_STATE

__all__ = [
    "EstimationError",
    "FitResult",
    "FreeParameter",
    "default_start",
    "estimate",
    "information_criteria",
    "pack_parameters",
    "parameter_layout",
    "unpack_parameters",
    "weighted_loglik",
]

# objective value returned to the optimizer when the filter diverges
_PENALTY = 1e15

# floors keeping tail and copula dof estimates inside the region where the
# information matrix and the conditional mean stay finite
_TAIL_FLOOR = 2.1
_DOF_FLOOR = 0.1

# atanh saturates in float64 near |x| = 1; keep transforms strictly inside
_UNIT_CAP = 1.0 - 1e-12

_STATE_SLOT = {
    "initial_loc_gdp": 0,
    "initial_loc_related": 1,
    "initial_scale_gdp": 3,
    "initial_scale_related": 4,
}

_GAIN_SLOT = {
    "gain_loc_gdp": 0,
    "gain_loc_related": 1,
    "gain_loc_common": 2,
    "gain_scale_gdp": 3,
    "gain_scale_related": 4,
    "gain_scale_common": 5,
    "gain_shape_gdp": 6,
    "gain_shape_related": 7,
    "gain_shape_common": 8,
}

_SCALAR_FIELD = {
    "ar_loc_common": "loc_common_ar",
    "ar_scale_common": "scale_common_ar",
    "ar_shape_trend": "shape_trend_ar",
    "ar_shape_common": "shape_common_ar",
    "loading_loc": "loc_loading",
    "loading_scale": "scale_loading",
    "loading_shape": "shape_loading",
    "tail_gdp": "gdp_tail",
    "tail_related": "related_tail",
}


@dataclass(frozen=True)
class FreeParameter:
    """One estimable coordinate: its name and transform kind."""

    name: str
    kind: str  # free | positive | corr | tail | dof


def parameter_layout(spec: ModelSpec) -> list[FreeParameter]:
    """Ordered free parameters implied by the spec.

    The length of this list is the mechanically counted p reported in fit
    summaries and used by the information criteria.
    """
    out = [
        FreeParameter("initial_loc_gdp", "free"),
        FreeParameter("initial_loc_related", "free"),
        FreeParameter("initial_scale_gdp", "free"),
        FreeParameter("initial_scale_related", "free"),
        FreeParameter("gain_loc_gdp", "positive"),
        FreeParameter("gain_loc_related", "positive"),
        FreeParameter("gain_loc_common", "positive"),
    ]
    if spec.dynamic_scale:
        out += [
            FreeParameter("gain_scale_gdp", "positive"),
            FreeParameter("gain_scale_related", "positive"),
            FreeParameter("gain_scale_common", "positive"),
        ]
    if spec.dynamic_shape:
        out += [
            FreeParameter("gain_shape_gdp", "positive"),
            FreeParameter("gain_shape_related", "positive"),
            FreeParameter("gain_shape_common", "positive"),
        ]
    if spec.loc_common_ar:
        out.append(FreeParameter("ar_loc_common", "corr"))
    if spec.dynamic_scale:
        out.append(FreeParameter("ar_scale_common", "corr"))
    if spec.dynamic_shape:
        out += [
            FreeParameter("ar_shape_trend", "corr"),
            FreeParameter("ar_shape_common", "corr"),
        ]
    out.append(FreeParameter("loading_loc", "free"))
    if spec.dynamic_scale:
        out.append(FreeParameter("loading_scale", "free"))
    if spec.dynamic_shape:
        out.append(FreeParameter("loading_shape", "free"))
    if spec.gdp_family.free_tail:
        out.append(FreeParameter("tail_gdp", "tail"))
    if spec.related_family.free_tail:
        out.append(FreeParameter("tail_related", "tail"))
    if spec.copula_family is not CopulaFamily.INDEPENDENCE:
        out.append(FreeParameter("copula_dependence", "corr"))
    if spec.copula_family is CopulaFamily.STUDENT_T:
        out.append(FreeParameter("copula_dof", "dof"))
    return out


def _to_unconstrained(value: float, kind: str) -> float:
    if kind == "free":
        return float(value)
    if kind == "positive":
        return math.log(value)
    if kind == "corr":
        return math.atanh(min(max(value, -_UNIT_CAP), _UNIT_CAP))
    if kind == "tail":
        return math.log(value - _TAIL_FLOOR)
    if kind == "dof":
        return math.log(value - _DOF_FLOOR)
    raise ValueError(f"unknown transform kind {kind!r}")


def _to_natural(x: float, kind: str) -> float:
    if kind == "free":
        return float(x)
    if kind == "positive":
        return math.exp(x)
    if kind == "corr":
        v = math.tanh(x)
        return min(max(v, -_UNIT_CAP), _UNIT_CAP)
    if kind == "tail":
        return _TAIL_FLOOR + math.exp(x)
    if kind == "dof":
        return _DOF_FLOOR + math.exp(x)
    raise ValueError(f"unknown transform kind {kind!r}")


def _natural_value(theta: ModelParameters, name: str) -> float:
    if name in _STATE_SLOT:
        return float(theta.initial_state[_STATE_SLOT[name]])
    if name in _GAIN_SLOT:
        return float(theta.prediction_gains[_GAIN_SLOT[name]])
    if name in _SCALAR_FIELD:
        return float(getattr(theta, _SCALAR_FIELD[name]))
    if name == "copula_dependence":
        return float(theta.copula.dependence)
    if name == "copula_dof":
        return float(theta.copula.dof)
    raise KeyError(name)


def pack_parameters(theta: ModelParameters, spec: ModelSpec) -> np.ndarray:
    """Natural parameters to the unconstrained optimizer vector."""
    layout = parameter_layout(spec)
    return np.array(
        [_to_unconstrained(_natural_value(theta, p.name), p.kind) for p in layout]
    )


def unpack_parameters(
    x: np.ndarray, spec: ModelSpec, weight: float = 1.0 / 3.0
) -> ModelParameters:
    """Unconstrained optimizer vector to natural parameters.

    Fixed quantities take their structural values: inactive gains zero,
    zero-mean stationary components started at zero, unit loadings where
    not estimated, infinite tails for Gaussian-tailed families.
    """
    layout = parameter_layout(spec)
    x = np.asarray(x, dtype=float)
    if x.shape != (len(layout),):
        raise ValueError(
            f"expected {len(layout)} free parameters for {spec.label}, "
            f"got shape {x.shape}"
        )
    z0 = np.zeros(N_STATE)
    gains = np.zeros(N_STATE)
    scalars = {
        "loc_common_ar": 0.0,
        "scale_common_ar": 0.0,
        "shape_trend_ar": 0.0,
        "shape_common_ar": 0.0,
        "loc_loading": 1.0,
        "scale_loading": 1.0,
        "shape_loading": 1.0,
        "gdp_tail": math.inf,
        "related_tail": math.inf,
    }
    dep = 0.0
    dof = 8.0
    for p, xi in zip(layout, x):
        v = _to_natural(float(xi), p.kind)
        if p.name in _STATE_SLOT:
            z0[_STATE_SLOT[p.name]] = v
        elif p.name in _GAIN_SLOT:
            gains[_GAIN_SLOT[p.name]] = v
        elif p.name in _SCALAR_FIELD:
            scalars[_SCALAR_FIELD[p.name]] = v
        elif p.name == "copula_dependence":
            dep = v
        else:
            dof = v
    copula = CopulaSpec(family=spec.copula_family, dependence=dep, dof=dof)
    return ModelParameters(
        initial_state=z0,
        prediction_gains=gains,
        update_gains=None,
        copula=copula,
        weight=weight,
        **scalars,
    )


def weighted_loglik(
    theta: ModelParameters,
    panel,
    spec: ModelSpec,
    force_python: bool | None = None,
) -> float:
    """Sum over t of d1*logf1 + d1*d2*logc + W*d2*logf2 in one filter pass."""
    res = run_filter(panel, theta, spec, force_python=force_python)
    return res.weighted_loglik(theta.weight)


@dataclass
class FitResult:
    """Estimation output with the fit-summary column set.

    ``total_loglik`` is the maximized weighted objective;
    ``independence_loglik`` re-evaluates it at the optimum with the copula
    switched off (the dynamics never see the copula, so this is the same
    filter pass minus the copula terms); ``gdp_loglik`` is the unweighted
    GDP marginal sum.
    """

    estimate: ModelParameters
    spec: ModelSpec
    total_loglik: float
    independence_loglik: float
    gdp_loglik: float
    aic: float
    bic: float
    n_params: int
    n_obs: int
    convergence: dict
    per_start_records: list = field(default_factory=list)

    def summary(self) -> dict:
        cop = self.estimate.copula
        return {
            "label": self.spec.label,
            "total_loglik": self.total_loglik,
            "independence_loglik": self.independence_loglik,
            "gdp_loglik": self.gdp_loglik,
            "dependence": cop.dependence,
            "copula_dof": cop.dof if cop.family is CopulaFamily.STUDENT_T else None,
            "aic": self.aic,
            "bic": self.bic,
            "n_params": self.n_params,
            "n_obs": self.n_obs,
        }


class EstimationError(RuntimeError):
    """All optimizer starts failed; carries the per-start diagnostics."""

    def __init__(self, message: str, records: list):
        super().__init__(message)
        self.records = records


def information_criteria(loglik: float, p: int, n: int) -> tuple[float, float]:
    """AIC and BIC from a log likelihood, -2*ll + {2, ln n} * p."""
    aic = -2.0 * loglik + 2.0 * p
    bic = -2.0 * loglik + math.log(n) * p
    return aic, bic


def default_start(panel, spec: ModelSpec, weight: float = 1.0 / 3.0) -> ModelParameters:
    """Moment-based starting values; gains start small (0.05 or less).

    Locations aggregated over five monthly lags carry triple the monthly
    mean, so aggregated series start their trend at mean/3; the
    gaussian_approx scale start inverts the sqrt(19)/3 constant-scale
    aggregation factor.
    """
    y = np.asarray(panel.y, dtype=float)
    mask = np.asarray(panel.mask).astype(bool)
    z0 = np.zeros(N_STATE)
    gains = np.zeros(N_STATE)
    means = np.zeros(2)
    sds = np.ones(2)
    for i in range(2):
        obs = y[i, mask[i]]
        if obs.size:
            means[i] = float(np.mean(obs))
            sds[i] = max(float(np.std(obs)), 1e-3)
    z0[0] = means[0] / 3.0
    z0[1] = means[1] / 3.0 if spec.related_loc_aggregated else means[1]
    if spec.gdp_scale_aggregated:
        z0[3] = math.log(sds[0] * 3.0 / math.sqrt(19.0))
    else:
        z0[3] = math.log(sds[0])
    z0[4] = math.log(sds[1])
    gains[0:3] = 0.05
    if spec.dynamic_scale:
        gains[3:6] = 0.03
    if spec.dynamic_shape:
        gains[6:9] = 0.02
    kwargs = {}
    if spec.loc_common_ar:
        kwargs["loc_common_ar"] = 0.5
    if spec.dynamic_scale:
        kwargs["scale_common_ar"] = 0.7
    if spec.dynamic_shape:
        kwargs["shape_trend_ar"] = 0.8
        kwargs["shape_common_ar"] = 0.7
    if spec.gdp_family.free_tail:
        kwargs["gdp_tail"] = 8.0
    if spec.related_family.free_tail:
        kwargs["related_tail"] = 8.0
    if spec.copula_family is CopulaFamily.INDEPENDENCE:
        cop = CopulaSpec()
    else:
        cop = CopulaSpec(family=spec.copula_family, dependence=0.2, dof=8.0)
    return ModelParameters(
        initial_state=z0,
        prediction_gains=gains,
        copula=cop,
        weight=weight,
        **kwargs,
    )


# transformed-space perturbation scale per transform kind, used to fan the
# deterministic multi-starts around the base point
_PERTURB_SCALE = {"free": 0.25, "positive": 0.6, "corr": 0.4, "tail": 0.5, "dof": 0.5}


def _start_points(
    base: np.ndarray, layout: list[FreeParameter], n_starts: int, seed: int
) -> list[np.ndarray]:
    points = [base.copy()]
    scales = np.array([_PERTURB_SCALE[p.kind] for p in layout])
    for k in range(1, n_starts):
        rng = np.random.default_rng([int(seed), k])
        points.append(base + scales * rng.standard_normal(base.size))
    return points


def estimate(
    panel,
    spec: ModelSpec,
    weight: float = 1.0 / 3.0,
    seed: int = 0,
    n_starts: int = 5,
    maxiter: int = 2000,
    tol: float = 1e-8,
    warm_start: ModelParameters | None = None,
    bounds: dict | None = None,
    force_python: bool | None = None,
) -> FitResult:
    """Maximize the weighted log likelihood with multi-start L-BFGS-B.

    Starts are deterministic given ``seed``: the first is the moment-based
    default (or ``warm_start`` when given), the rest seeded perturbations
    of it in transformed space. ``bounds`` optionally maps free-parameter
    names to (lo, hi) in transformed space.
    """
    layout = parameter_layout(spec)
    if warm_start is not None:
        base_theta = warm_start
    else:
        base_theta = default_start(panel, spec, weight)
    base = pack_parameters(base_theta, spec)
    bound_list = None
    if bounds:
        unknown = set(bounds) - {p.name for p in layout}
        if unknown:
            raise ValueError(f"bounds reference unknown parameters: {sorted(unknown)}")
        bound_list = [bounds.get(p.name, (None, None)) for p in layout]

    def objective(x):
        try:
            theta = unpack_parameters(x, spec, weight)
            value = weighted_loglik(theta, panel, spec, force_python=force_python)
        except (ValueError, OverflowError, FloatingPointError):
            return _PENALTY
        if not math.isfinite(value):
            return _PENALTY
        return -value

    records = []
    best = None
    for k, x0 in enumerate(_start_points(base, layout, n_starts, seed)):
        if objective(x0) >= _PENALTY:
            records.append(
                {
                    "start": k,
                    "objective": math.inf,
                    "converged": False,
                    "iterations": 0,
                    "message": "invalid starting point",
                }
            )
            continue
        res = minimize(
            objective,
            x0,
            method="L-BFGS-B",
            bounds=bound_list,
            options={"maxiter": maxiter, "ftol": tol, "eps": 1e-6},
        )
        nit = int(res.nit)
        # line searches on long filter recursions can stall far from the
        # optimum; restarting from the incumbent rebuilds the curvature
        # model and recovers the remaining descent at little extra cost
        for _ in range(2):
            if not math.isfinite(res.fun) or res.fun >= _PENALTY:
                break
            again = minimize(
                objective,
                res.x,
                method="L-BFGS-B",
                bounds=bound_list,
                options={"maxiter": maxiter, "ftol": tol, "eps": 1e-6},
            )
            nit += int(again.nit)
            if not (again.fun < res.fun - abs(res.fun) * tol * 10.0):
                if again.fun < res.fun:
                    res = again
                break
            res = again
        records.append(
            {
                "start": k,
                "objective": float(res.fun),
                "converged": bool(res.success),
                "iterations": nit,
                "message": str(res.message),
            }
        )
        if math.isfinite(res.fun) and res.fun < _PENALTY:
            if best is None or res.fun < best[1].fun:
                best = (k, res)
    if best is None:
        raise EstimationError(
            f"all {n_starts} starts failed for model {spec.label}", records
        )
    k_best, res = best
    theta_hat = unpack_parameters(res.x, spec, weight)
    filt = run_filter(panel, theta_hat, spec, force_python=force_python)
    if not filt.ok:
        raise EstimationError(
            f"optimum of model {spec.label} does not filter cleanly", records
        )
    s_gdp = float(filt.loglik_series[0].sum())
    s_rel = float(filt.loglik_series[1].sum())
    s_cop = float(filt.loglik_copula.sum())
    total = s_gdp + weight * s_rel + s_cop
    indep = s_gdp + weight * s_rel
    n_obs = int(np.asarray(panel.mask).astype(bool).sum())
    aic, bic = information_criteria(total, len(layout), n_obs)
    return FitResult(
        estimate=theta_hat,
        spec=spec,
        total_loglik=total,
        independence_loglik=indep,
        gdp_loglik=s_gdp,
        aic=aic,
        bic=bic,
        n_params=len(layout),
        n_obs=n_obs,
        convergence={
            "status": records[k_best]["message"],
            "converged": records[k_best]["converged"],
            "iterations": records[k_best]["iterations"],
            "best_start": k_best,
        },
        per_start_records=records,
    )
