"""Quasi score-driven state recursion and mixed-frequency links.

The nine states (idiosyncratic trends and common factors for the location,
scale and shape blocks) evolve through the scaled score of the
independence density: the copula contributes to the likelihood but never
to the dynamics. Prediction uses z_{t+1} = B z_t + A s_t; the
within-period filtered state z_{t|t} = z_t + D s_t lets a contemporaneous
release of the related series move the nowcast.

Mixed frequencies enter through the links: quarterly (and rolling
quarterly) locations are five-lag weighted sums of monthly locations with
weights (1/3, 2/3, 1, 2/3, 1/3); under Gaussian GDP errors monthly
variances aggregate with the squared weights; scales use an exponential
link and shapes a logistic one.

The sequential recursion itself lives in a compiled extension with a pure
NumPy fallback (see _core); this module holds the reference
implementations of each piece plus the public ``run_filter``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import _core
from .asymmetric_t import ASTParams, k_const
from .copula import CopulaFamily, logdensity as copula_logdensity
from .modelspec import (
    LOC_COMMON,
    N_STATE,
    ModelParameters,
    ModelSpec,
)
from . import asymmetric_t

__all__ = [
    "Transition",
    "LagBuffers",
    "ScoredStep",
    "FilterResult",
    "build_transition",
    "init_buffers",
    "link_parameters",
    "link_jacobian",
    "quasi_score",
    "step",
    "run_filter",
]

# Temporal aggregation weights for quarterly growth expressed on monthly
# growth rates, current month first
AGG_WEIGHTS = np.array([1.0, 2.0, 1.0, 2.0, 1.0]) / np.array([3.0, 3.0, 1.0, 3.0, 3.0])
AGG_WEIGHTS_SQ = AGG_WEIGHTS**2


@dataclass(frozen=True)
class Transition:
    """Diagonal transition B with prediction (A) and update (D) gains."""

    transition_diag: np.ndarray
    prediction_gains: np.ndarray
    update_gains: np.ndarray

    def __post_init__(self):
        for name in ("transition_diag", "prediction_gains", "update_gains"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (N_STATE,):
                raise ValueError(f"{name} must have shape ({N_STATE},)")
            object.__setattr__(self, name, arr)


def build_transition(theta: ModelParameters, spec: ModelSpec) -> Transition:
    """Assemble B, A, D diagonals; inactive blocks are frozen (B=1, gains 0)."""
    b = np.ones(N_STATE)
    b[LOC_COMMON] = theta.loc_common_ar if spec.loc_common_ar else 0.0
    if spec.dynamic_scale:
        b[5] = theta.scale_common_ar
    if spec.dynamic_shape:
        b[6] = theta.shape_trend_ar
        b[7] = theta.shape_trend_ar
        b[8] = theta.shape_common_ar
    active = spec.active_states()
    a = np.where(active, theta.prediction_gains, 0.0)
    d = np.where(active, theta.update_gains, 0.0)
    return Transition(b, a, d)


@dataclass
class LagBuffers:
    """Previous four monthly values feeding the five-term aggregations.

    ``loc[..., i, j]`` holds series i's monthly location j+1 months back;
    ``scale_sq[..., j]`` holds GDP's squared monthly scale. Leading axes
    broadcast (the nowcast simulator carries one buffer set per draw).
    """

    loc: np.ndarray
    scale_sq: np.ndarray

    def copy(self) -> "LagBuffers":
        return LagBuffers(self.loc.copy(), self.scale_sq.copy())


def _monthly_parts(z, theta: ModelParameters):
    z = np.asarray(z, dtype=float)
    ml1 = z[..., 0] + z[..., 2]
    ml2 = z[..., 1] + theta.loc_loading * z[..., 2]
    ls1 = z[..., 3] + z[..., 5]
    ls2 = z[..., 4] + theta.scale_loading * z[..., 5]
    la1 = z[..., 6] + z[..., 8]
    la2 = z[..., 7] + theta.shape_loading * z[..., 8]
    return ml1, ml2, ls1, ls2, la1, la2


def init_buffers(theta: ModelParameters, spec: ModelSpec, lead_shape=()) -> LagBuffers:
    """Start-up buffers: replicate the initial state's implied monthly values."""
    ml1, ml2, ls1, _, _, _ = _monthly_parts(theta.initial_state, theta)
    loc = np.empty(lead_shape + (2, 4))
    loc[..., 0, :] = ml1
    loc[..., 1, :] = ml2
    scale_sq = np.full(lead_shape + (4,), np.exp(2.0 * ls1))
    return LagBuffers(loc, scale_sq)


def push_buffers(buffers: LagBuffers, z, theta: ModelParameters) -> None:
    """Shift the lag buffers one month, inserting period t's monthly values."""
    ml1, ml2, ls1, _, _, _ = _monthly_parts(z, theta)
    buffers.loc[..., :, 1:] = buffers.loc[..., :, :-1]
    buffers.loc[..., 0, 0] = ml1
    buffers.loc[..., 1, 0] = ml2
    buffers.scale_sq[..., 1:] = buffers.scale_sq[..., :-1]
    buffers.scale_sq[..., 0] = np.exp(2.0 * ls1)


def link_parameters(
    z, theta: ModelParameters, spec: ModelSpec, buffers: LagBuffers
) -> tuple[ASTParams, ASTParams]:
    """Map states to each series' conditional density parameters.

    Broadcasts over leading axes of ``z`` and the buffers.
    """
    ml1, ml2, ls1, ls2, la1, la2 = _monthly_parts(z, theta)
    w = AGG_WEIGHTS
    mu1 = w[0] * ml1 + np.einsum("...j,j->...", buffers.loc[..., 0, :], w[1:])
    if spec.related_loc_aggregated:
        mu2 = w[0] * ml2 + np.einsum("...j,j->...", buffers.loc[..., 1, :], w[1:])
    else:
        mu2 = ml2
    if spec.gdp_scale_aggregated:
        var_q = AGG_WEIGHTS_SQ[0] * np.exp(2.0 * ls1) + np.einsum(
            "...j,j->...", buffers.scale_sq, AGG_WEIGHTS_SQ[1:]
        )
        sigma1 = np.sqrt(var_q)
    else:
        sigma1 = np.exp(ls1)
    sigma2 = np.exp(ls2)
    alpha1 = special.expit(-la1)
    alpha2 = special.expit(-la2)
    p1 = ASTParams(mu1, sigma1, alpha1, theta.gdp_tail, theta.gdp_tail)
    p2 = ASTParams(mu2, sigma2, alpha2, theta.related_tail, theta.related_tail)
    return p1, p2


def link_jacobian(
    z, theta: ModelParameters, spec: ModelSpec, buffers: LagBuffers
) -> np.ndarray:
    """d(mu_i, sigma_i, alpha_i)/dz, shape (..., 2, 3, 9).

    Only the current period's states enter; lagged buffer values are data
    by the time period t is scored.
    """
    z = np.asarray(z, dtype=float)
    p1, p2 = link_parameters(z, theta, spec, buffers)
    lead = z.shape[:-1]
    jac = np.zeros(lead + (2, 3, N_STATE))
    w0 = AGG_WEIGHTS[0]
    # locations
    jac[..., 0, 0, 0] = w0
    jac[..., 0, 0, 2] = w0
    w2 = w0 if spec.related_loc_aggregated else 1.0
    jac[..., 1, 0, 1] = w2
    jac[..., 1, 0, 2] = w2 * theta.loc_loading
    # scales
    if spec.gdp_scale_aggregated:
        _, _, ls1, _, _, _ = _monthly_parts(z, theta)
        dsig = AGG_WEIGHTS_SQ[0] * np.exp(2.0 * ls1) / p1.scale
        jac[..., 0, 1, 3] = dsig
        jac[..., 0, 1, 5] = dsig
    else:
        jac[..., 0, 1, 3] = p1.scale
        jac[..., 0, 1, 5] = p1.scale
    jac[..., 1, 1, 4] = p2.scale
    jac[..., 1, 1, 5] = theta.scale_loading * p2.scale
    # shapes: d expit(-x)/dx = -alpha(1-alpha)
    da1 = -p1.shape * (1.0 - p1.shape)
    da2 = -p2.shape * (1.0 - p2.shape)
    jac[..., 0, 2, 6] = da1
    jac[..., 0, 2, 8] = da1
    jac[..., 1, 2, 7] = da2
    jac[..., 1, 2, 8] = theta.shape_loading * da2
    return jac


@dataclass
class ScoredStep:
    """One period's score pieces: raw score, its scaling, and loglik terms."""

    raw_score: np.ndarray
    scaling: np.ndarray
    scaled_score: np.ndarray
    loglik_contribs: np.ndarray
    copula_contrib: float = 0.0


def quasi_score(y, params: tuple[ASTParams, ASTParams], mask, chain) -> ScoredStep:
    """Masked chain-rule score and its information scaling.

    ``chain`` is the link Jacobian from :func:`link_jacobian`. The scaling
    is the elementwise pseudo-inverse of the summed squared-Jacobian
    information diagonal: directions with zero information get a zero
    scaled score. The copula never enters here.
    """
    y = np.asarray(y, dtype=float)
    mask = np.asarray(mask)
    chain = np.asarray(chain, dtype=float)
    lead = chain.shape[:-3]
    raw = np.zeros(lead + (N_STATE,))
    info = np.zeros(lead + (N_STATE,))
    ll = np.zeros(lead + (2,))
    for i, p in enumerate(params):
        delta = mask[..., i]
        if not np.any(delta):
            continue
        yi = np.where(delta, y[..., i], p.location)
        d_mu, d_sig, d_alp = asymmetric_t.score(yi, p)
        grads = np.stack(np.broadcast_arrays(d_mu, d_sig, d_alp), axis=-1)
        i_mu, i_sig, i_alp = asymmetric_t.fisher(p)
        infos = np.stack(np.broadcast_arrays(i_mu, i_sig, i_alp), axis=-1)
        dm = np.where(delta, 1.0, 0.0)
        raw = raw + dm[..., None] * np.einsum("...p,...pk->...k", grads, chain[..., i, :, :])
        info = info + dm[..., None] * np.einsum(
            "...p,...pk->...k", infos, chain[..., i, :, :] ** 2
        )
        ll[..., i] = dm * asymmetric_t.logpdf(yi, p)
    scaling = np.where(info > 0.0, 1.0 / np.where(info > 0.0, info, 1.0), 0.0)
    return ScoredStep(raw, scaling, scaling * raw, ll)


def step(z, scored: ScoredStep, trans: Transition):
    """Predict/update split: returns (filtered, predicted-for-next-period)."""
    z = np.asarray(z, dtype=float)
    s = scored.scaled_score
    filtered = z + trans.update_gains * s
    predicted = trans.transition_diag * z + trans.prediction_gains * s
    return filtered, predicted


@dataclass
class FilterResult:
    """One deterministic filter pass over a panel."""

    state_path: np.ndarray       # predicted states z_t, (N, 9)
    filtered_path: np.ndarray    # z_{t|t}, (N, 9)
    params_path: np.ndarray      # one-step-ahead (mu, sigma, alpha), (N, 2, 3)
    filtered_params: np.ndarray  # same at the filtered states, (N, 2, 3)
    loglik_series: np.ndarray    # masked per-period marginal logliks, (2, N)
    loglik_copula: np.ndarray    # per-period copula term, (N,)
    scaled_scores: np.ndarray    # s_t, (N, 9)
    final_state: np.ndarray      # predicted state for period N (one past the panel)
    bad_index: int = -1          # first period with a non-finite likelihood
    buffers: LagBuffers | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.bad_index < 0

    @property
    def total_loglik(self) -> float:
        if not self.ok:
            return -np.inf
        return float(
            self.loglik_series[0].sum()
            + self.loglik_series[1].sum()
            + self.loglik_copula.sum()
        )

    @property
    def gdp_loglik(self) -> float:
        return float(self.loglik_series[0].sum())

    def weighted_loglik(self, weight: float) -> float:
        if not self.ok:
            return -np.inf
        return float(
            self.loglik_series[0].sum()
            + weight * self.loglik_series[1].sum()
            + self.loglik_copula.sum()
        )


def validate_theta(theta: ModelParameters, spec: ModelSpec) -> None:
    """Cross-check parameter values against the spec's family constraints."""
    if spec.gdp_family.gaussian_tails and not np.isinf(theta.gdp_tail):
        raise ValueError("spec requires Gaussian GDP tails (tail = inf)")
    if spec.related_family.gaussian_tails and not np.isinf(theta.related_tail):
        raise ValueError("spec requires Gaussian related-series tails (tail = inf)")
    if not spec.gdp_family.free_shape and theta.initial_state[6] != 0.0:
        raise ValueError("symmetric GDP family requires a zero initial shape trend")
    if not spec.related_family.free_shape and theta.initial_state[7] != 0.0:
        raise ValueError("symmetric related family requires a zero initial shape trend")


def run_filter(
    panel, theta: ModelParameters, spec: ModelSpec, force_python: bool | None = None
) -> FilterResult:
    """Deterministic sequential filter pass over an aligned panel.

    Evaluates each period's log likelihood at the one-step-ahead
    parameters (marginals plus the copula term when both series are
    observed) and advances the states by the scaled independence score.
    """
    validate_theta(theta, spec)
    y = np.ascontiguousarray(panel.y, dtype=float)
    mask = np.ascontiguousarray(panel.mask, dtype=np.uint8)
    if y.shape != mask.shape or y.ndim != 2 or y.shape[0] != 2:
        raise ValueError("panel must carry 2 x N observations and matching mask")
    trans = build_transition(theta, spec)
    lam = np.array([theta.loc_loading, theta.scale_loading, theta.shape_loading])
    nu = np.array([theta.gdp_tail, theta.related_tail])
    kc = np.array([k_const(nu[0]), k_const(nu[1])])
    loc_agg = np.array([1, 1 if spec.related_loc_aggregated else 0], dtype=np.uint8)
    core = _core.get_filter_core(force_python)
    (z_pred, z_filt, par_pred, par_filt, ll, s_path, z_final, buf_loc,
     buf_scale, bad) = core(
        y,
        mask,
        np.ascontiguousarray(theta.initial_state, dtype=float),
        trans.transition_diag,
        trans.prediction_gains,
        trans.update_gains,
        lam,
        nu,
        kc,
        loc_agg,
        1 if spec.gdp_scale_aggregated else 0,
    )
    n = y.shape[1]
    llc = np.zeros(n)
    if bad < 0 and theta.copula.family is not CopulaFamily.INDEPENDENCE:
        both = (mask[0] == 1) & (mask[1] == 1)
        if np.any(both):
            p1 = ASTParams(
                par_pred[both, 0, 0], par_pred[both, 0, 1], par_pred[both, 0, 2],
                theta.gdp_tail, theta.gdp_tail,
            )
            p2 = ASTParams(
                par_pred[both, 1, 0], par_pred[both, 1, 1], par_pred[both, 1, 2],
                theta.related_tail, theta.related_tail,
            )
            u1 = asymmetric_t.cdf(y[0, both], p1)
            u2 = asymmetric_t.cdf(y[1, both], p2)
            vals = copula_logdensity(u1, u2, theta.copula)
            if not np.all(np.isfinite(vals)):
                bad = int(np.flatnonzero(both)[~np.isfinite(vals)][0])
            else:
                llc[both] = vals
    return FilterResult(
        state_path=z_pred,
        filtered_path=z_filt,
        params_path=par_pred,
        filtered_params=par_filt,
        loglik_series=ll,
        loglik_copula=llc,
        scaled_scores=s_path,
        final_state=z_final,
        bad_index=int(bad),
        buffers=LagBuffers(buf_loc, buf_scale),
    )
