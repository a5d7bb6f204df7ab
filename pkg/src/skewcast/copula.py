"""Bivariate Gaussian and Student-t copulas on probability-integral transforms.

The copula couples the two series' one-step-ahead prediction errors in the
likelihood only; it never enters the score that drives the states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

__all__ = ["CopulaFamily", "CopulaSpec", "logdensity", "copula_cdf", "copula_sample"]

# PIT inputs are clamped before quantile mapping so extreme prediction
# errors cannot produce infinite quantiles
PIT_CLIP = 1e-12


class CopulaFamily(str, Enum):
    INDEPENDENCE = "independence"
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"


@dataclass
class CopulaSpec:
    """Copula family, dependence (off-diagonal of R) and degrees of freedom.

    ``dof`` is ignored unless the family is student_t. Independence is the
    Gaussian copula with dependence 0: the log density is identically zero.
    """

    family: CopulaFamily = CopulaFamily.INDEPENDENCE
    dependence: float = 0.0
    dof: float = 8.0

    def __post_init__(self):
        self.family = CopulaFamily(self.family)
        self.dependence = float(self.dependence)
        if not (-1.0 < self.dependence < 1.0):
            raise ValueError("dependence must lie strictly inside (-1, 1)")
        if self.family is CopulaFamily.STUDENT_T:
            self.dof = float(self.dof)
            if not (self.dof > 0.0):
                raise ValueError("student_t copula requires dof > 0")


def _clip_u(u):
    return np.clip(np.asarray(u, dtype=float), PIT_CLIP, 1.0 - PIT_CLIP)


def logdensity(u1, u2, spec: CopulaSpec):
    """Log copula density at (u1, u2), broadcasting over arrays."""
    u1 = _clip_u(u1)
    u2 = _clip_u(u2)
    rho = spec.dependence
    if spec.family is CopulaFamily.INDEPENDENCE or (
        spec.family is CopulaFamily.GAUSSIAN and rho == 0.0
    ):
        out = np.zeros(np.broadcast(u1, u2).shape)
        return out if out.ndim else 0.0
    if spec.family is CopulaFamily.GAUSSIAN:
        x1 = special.ndtri(u1)
        x2 = special.ndtri(u2)
        r2 = 1.0 - rho * rho
        out = -0.5 * math.log(r2) - (
            rho * rho * (x1 * x1 + x2 * x2) - 2.0 * rho * x1 * x2
        ) / (2.0 * r2)
        return out if out.ndim else float(out)
    nu = spec.dof
    x1 = special.stdtrit(nu, u1)
    x2 = special.stdtrit(nu, u2)
    r2 = 1.0 - rho * rho
    quad = (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / r2
    log_joint = (
        special.gammaln((nu + 2.0) / 2.0)
        - special.gammaln(nu / 2.0)
        - math.log(nu * math.pi)
        - 0.5 * math.log(r2)
        - 0.5 * (nu + 2.0) * np.log1p(quad / nu)
    )
    out = log_joint - _t_logpdf(x1, nu) - _t_logpdf(x2, nu)
    return out if out.ndim else float(out)


def _t_logpdf(x, nu):
    return (
        special.gammaln((nu + 1.0) / 2.0)
        - special.gammaln(nu / 2.0)
        - 0.5 * math.log(nu * math.pi)
        - 0.5 * (nu + 1.0) * np.log1p(x * x / nu)
    )


def copula_cdf(u1, u2, spec: CopulaSpec, n_grid: int = 400):
    """Copula distribution function C(u1, u2) by product-rule quadrature.

    Deterministic Gauss-Legendre integration of the density over the
    rectangle (0,u1) x (0,u2); a slow diagnostic for tests, not used in
    the likelihood.
    """
    u1 = float(np.asarray(u1))
    u2 = float(np.asarray(u2))
    if spec.family is CopulaFamily.INDEPENDENCE:
        return u1 * u2
    nodes, weights = np.polynomial.legendre.leggauss(n_grid)
    a1 = 0.5 * u1 * (nodes + 1.0)
    a2 = 0.5 * u2 * (nodes + 1.0)
    w1 = 0.5 * u1 * weights
    w2 = 0.5 * u2 * weights
    dens = np.exp(logdensity(a1[:, None], a2[None, :], spec))
    return float(w1 @ dens @ w2)


def copula_sample(n: int, spec: CopulaSpec, rng) -> np.ndarray:
    """Draw n pairs (u1, u2) with uniform margins and the spec's dependence."""
    rng = np.random.default_rng(rng)
    if spec.family is CopulaFamily.INDEPENDENCE:
        return np.column_stack([rng.random(n), rng.random(n)])
    rho = spec.dependence
    z1 = rng.standard_normal(n)
    z2 = rho * z1 + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)
    if spec.family is CopulaFamily.STUDENT_T:
        scale = np.sqrt(rng.chisquare(spec.dof, n) / spec.dof)
        u1 = special.stdtr(spec.dof, z1 / scale)
        u2 = special.stdtr(spec.dof, z2 / scale)
    else:
        u1 = special.ndtr(z1)
        u2 = special.ndtr(z2)
    return np.column_stack([u1, u2])
