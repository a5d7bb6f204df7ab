"""Asymmetric Student-t (AST) distribution family.

Density, distribution function, quantiles, sampling, analytic score and
diagonal information matrix for the two-piece asymmetric t used as the
conditional density of each series. The distribution has five parameters:
location, scale, shape (probability mass left of the mode) and two tail
parameters, one per side. Infinite tails are represented explicitly with
``numpy.inf`` and collapse each piece to its Gaussian limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

__all__ = [
    "ASTParams",
    "DistributionFamily",
    "k_const",
    "logpdf",
    "cdf",
    "quantile",
    "sample",
    "score",
    "fisher",
    "conditional_mean",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def k_const(nu):
    """K(nu) = Gamma((nu+1)/2) / (sqrt(nu*pi) * Gamma(nu/2)).

    Computed in log-gamma space; K(inf) is the Gaussian limit 1/sqrt(2*pi).
    """
    nu = float(nu)
    if math.isinf(nu):
        return 1.0 / _SQRT_2PI
    if nu <= 0.0:
        raise ValueError(f"tail parameter must be positive, got {nu}")
    return math.exp(
        special.gammaln((nu + 1.0) / 2.0)
        - special.gammaln(nu / 2.0)
        - 0.5 * math.log(nu * math.pi)
    )


@dataclass
class ASTParams:
    """Parameters of one series' conditional density.

    location and scale/shape may be scalars or broadcastable arrays (the
    filter produces whole parameter paths); the tail parameters are static
    scalars, equal across time.
    """

    location: float | np.ndarray
    scale: float | np.ndarray
    shape: float | np.ndarray
    tail_left: float
    tail_right: float

    def __post_init__(self):
        self.tail_left = float(self.tail_left)
        self.tail_right = float(self.tail_right)
        if not np.all(np.asarray(self.scale) > 0.0):
            raise ValueError("scale must be positive")
        sh = np.asarray(self.shape)
        if not np.all((sh > 0.0) & (sh < 1.0)):
            raise ValueError("shape must lie strictly inside (0, 1)")
        for nu in (self.tail_left, self.tail_right):
            if not (nu > 0.0):
                raise ValueError(f"tail parameter must be positive, got {nu}")

    @property
    def b_const(self) -> float | np.ndarray:
        """alpha*K(nu1) + (1-alpha)*K(nu2), the mixing-normalization constant."""
        return self.shape * k_const(self.tail_left) + (1.0 - self.shape) * k_const(
            self.tail_right
        )


class DistributionFamily(str, Enum):
    """Named special cases and their parameter constraints."""

    NORMAL = "normal"
    STUDENT_T = "student_t"
    SKEW_NORMAL = "skew_normal"
    SKEW_T = "skew_t"
    AST = "ast"

    @property
    def gaussian_tails(self) -> bool:
        return self in (DistributionFamily.NORMAL, DistributionFamily.SKEW_NORMAL)

    @property
    def free_tail(self) -> bool:
        return not self.gaussian_tails

    @property
    def free_shape(self) -> bool:
        return self in (
            DistributionFamily.SKEW_NORMAL,
            DistributionFamily.SKEW_T,
            DistributionFamily.AST,
        )

    def validate(self, p: ASTParams) -> None:
        """Raise if ``p`` violates this family's constraints."""
        if self.gaussian_tails and not (
            math.isinf(p.tail_left) and math.isinf(p.tail_right)
        ):
            raise ValueError(f"{self.value} requires infinite tails")
        if not self.free_shape and not np.all(np.asarray(p.shape) == 0.5):
            raise ValueError(f"{self.value} requires shape = 0.5")
        if self is not DistributionFamily.AST and p.tail_left != p.tail_right:
            raise ValueError(f"{self.value} requires equal tail parameters")


def _halfwidths(p: ASTParams):
    """Branch denominators 2*alpha*sigma*K(nu1) and 2*(1-alpha)*sigma*K(nu2)."""
    b_left = 2.0 * p.shape * p.scale * k_const(p.tail_left)
    b_right = 2.0 * (1.0 - p.shape) * p.scale * k_const(p.tail_right)
    return b_left, b_right


def _log_kernel(x, nu):
    # one-sided standardized log kernel; Gaussian limit at infinite tail
    if math.isinf(nu):
        return -0.5 * x * x
    return -0.5 * (nu + 1.0) * np.log1p(x * x / nu)


def logpdf(y, p: ASTParams):
    """Log density. Evaluates to -log(scale) exactly at y = location."""
    y = np.asarray(y, dtype=float)
    b_left, b_right = _halfwidths(p)
    z = y - p.location
    left = z <= 0.0
    kern = np.where(
        left,
        _log_kernel(z / b_left, p.tail_left),
        _log_kernel(z / b_right, p.tail_right),
    )
    out = -np.log(p.scale) + kern
    return out if out.ndim else float(out)


def _t_cdf(x, nu):
    if math.isinf(nu):
        return special.ndtr(x)
    return special.stdtr(nu, x)


def _t_quantile(q, nu):
    if math.isinf(nu):
        return special.ndtri(q)
    return special.stdtrit(nu, q)


def cdf(y, p: ASTParams):
    """Distribution function; cdf(location) = shape exactly."""
    y = np.asarray(y, dtype=float)
    b_left, b_right = _halfwidths(p)
    z = y - p.location
    left = z <= 0.0
    low = 2.0 * p.shape * _t_cdf(np.minimum(z, 0.0) / b_left, p.tail_left)
    high = p.shape + (1.0 - p.shape) * (
        2.0 * _t_cdf(np.maximum(z, 0.0) / b_right, p.tail_right) - 1.0
    )
    out = np.where(left, low, high)
    return out if out.ndim else float(out)


def quantile(u, p: ASTParams):
    """Inverse distribution function on (0, 1)."""
    u = np.asarray(u, dtype=float)
    if not np.all((u > 0.0) & (u < 1.0)):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    b_left, b_right = _halfwidths(p)
    left = u <= p.shape
    q_low = np.minimum(u / (2.0 * p.shape), 0.5)
    q_high = np.maximum((u + 1.0 - 2.0 * p.shape) / (2.0 * (1.0 - p.shape)), 0.5)
    low = p.location + b_left * _t_quantile(q_low, p.tail_left)
    high = p.location + b_right * _t_quantile(q_high, p.tail_right)
    out = np.where(left, low, high)
    return out if out.ndim else float(out)


def sample(p: ASTParams, n: int, rng) -> np.ndarray:
    """Draw ``n`` variates by inverse-CDF transform.

    ``rng`` is a seed or ``numpy.random.Generator``; same seed, same draws.
    """
    rng = np.random.default_rng(rng)
    u = rng.random(n)
    # rng.random can return exactly 0.0, outside the quantile domain
    u[u == 0.0] = np.finfo(float).tiny
    return np.asarray(quantile(u, p))


def _branch_score(z, b, nu, lo_side):
    """Score pieces for one side. z = y - mu, b the side's half-width."""
    x = z / b
    if math.isinf(nu):
        d_mu = x / b
        weight = x * x
    else:
        r = (nu + 1.0) / (1.0 + x * x / nu)
        d_mu = r * x / (nu * b)
        weight = r * x * x / nu
    d_sigma_sig = weight - 1.0  # times 1/sigma outside
    return d_mu, d_sigma_sig, weight


def score(y, p: ASTParams):
    """Analytic gradient of logpdf in (location, scale, shape).

    Exact derivatives of the two-piece log density. At y = location the
    left branch applies (the density's indicator convention), giving
    d_sigma = -1/scale and d_alpha = 0 there.
    """
    y = np.asarray(y, dtype=float)
    b_left, b_right = _halfwidths(p)
    z = y - p.location
    left = z <= 0.0
    zl = np.minimum(z, 0.0)
    zr = np.maximum(z, 0.0)
    dmu_l, dsig_l, w_l = _branch_score(zl, b_left, p.tail_left, True)
    dmu_r, dsig_r, w_r = _branch_score(zr, b_right, p.tail_right, False)
    d_mu = np.where(left, dmu_l, dmu_r)
    d_sigma = np.where(left, dsig_l, dsig_r) / p.scale
    # shape enters through the half-widths: d/da log b_left = 1/a on the
    # left and -1/(1-a) on the right
    d_alpha = np.where(left, w_l / p.shape, -w_r / (1.0 - p.shape))
    if d_mu.ndim:
        return d_mu, d_sigma, d_alpha
    return float(d_mu), float(d_sigma), float(d_alpha)


def _tail_ratio(nu):
    return 1.0 if math.isinf(nu) else (nu + 1.0) / (nu + 3.0)


def fisher(p: ASTParams):
    """Diagonal information terms (i_mu, i_sigma, i_alpha), as printed.

    Used only as the score scaling; any constant level offset is absorbed
    by the estimated gains.
    """
    a = p.shape
    k1 = k_const(p.tail_left)
    k2 = k_const(p.tail_right)
    r1 = _tail_ratio(p.tail_left)
    r2 = _tail_ratio(p.tail_right)
    s1 = 1.0 if math.isinf(p.tail_left) else p.tail_left / (p.tail_left + 3.0)
    s2 = 1.0 if math.isinf(p.tail_right) else p.tail_right / (p.tail_right + 3.0)
    sig2 = p.scale * p.scale
    i_mu = (r1 / (a * k1 * k1) + r2 / ((1.0 - a) * k2 * k2)) / sig2
    i_sigma = 2.0 * (a * s1 + (1.0 - a) * s2) / sig2
    i_alpha = 3.0 * (r1 / a + r2 / (1.0 - a))
    return i_mu, i_sigma, i_alpha


def conditional_mean(p: ASTParams, n_nodes: int = 256) -> float:
    """E[Y] by Gauss-Legendre quadrature of the quantile function.

    Integrates quantile(u) over u in (1e-6, 1-1e-6); requires both tail
    parameters above 1 so the mean exists.
    """
    if min(p.tail_left, p.tail_right) <= 1.0:
        raise ValueError("conditional mean requires tail parameters > 1")
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    lo, hi = 1e-6, 1.0 - 1e-6
    u = lo + 0.5 * (hi - lo) * (nodes + 1.0)
    vals = quantile(u, p)
    return float(0.5 * (hi - lo) * np.sum(weights * vals))
