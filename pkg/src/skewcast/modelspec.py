"""Model configurations and the estimable parameter set.

A ModelSpec declares which conditional-density family each series uses,
which parameter blocks are dynamic, the related series' frequency, and how
the GDP scale is aggregated. The six named configurations span constant
Gaussian errors up to dynamic scale and shape with skewed-t errors;
custom combinations are allowed but pass the same aggregation checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .asymmetric_t import DistributionFamily
from .copula import CopulaFamily, CopulaSpec

__all__ = [
    "ModelSpec",
    "ModelParameters",
    "build_spec",
    "MODEL_LABELS",
    "N_STATE",
    "STATE_NAMES",
]

# State vector layout, fixed at dimension 9. Indices 0-2 are the location
# block (two idiosyncratic trends, one common factor), 3-5 the scale block,
# 6-8 the shape block.
N_STATE = 9
LOC_TREND_GDP = 0
LOC_TREND_REL = 1
LOC_COMMON = 2
SCALE_TREND_GDP = 3
SCALE_TREND_REL = 4
SCALE_COMMON = 5
SHAPE_TREND_GDP = 6
SHAPE_TREND_REL = 7
SHAPE_COMMON = 8

STATE_NAMES = (
    "loc_trend_gdp",
    "loc_trend_related",
    "loc_common",
    "scale_trend_gdp",
    "scale_trend_related",
    "scale_common",
    "shape_trend_gdp",
    "shape_trend_related",
    "shape_common",
)

MODEL_LABELS = ("DVS_t", "DVS", "DV_t", "DV", "t", "benchmark")

MONTHLY = "monthly"
ROLLING_QUARTERLY = "rolling_quarterly"

GAUSSIAN_APPROX = "gaussian_approx"
DIRECT = "direct"
NONE = "none"


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model configuration.

    ``scale_aggregation`` controls the GDP scale link: ``gaussian_approx``
    aggregates monthly variances with squared temporal weights (valid only
    under Gaussian GDP errors), ``direct``/``none`` use the exponential
    link on the states as-is. ``loc_common_ar`` switches the location
    common factor from zero persistence to an estimated AR(1).

    ``copula_family`` names the copula whose parameters estimation frees;
    it defaults to the Student-t used for fit-summary reporting.
    """

    label: str
    gdp_family: DistributionFamily
    related_family: DistributionFamily
    dynamic_scale: bool
    dynamic_shape: bool
    related_frequency: str
    scale_aggregation: str
    copula_family: CopulaFamily = CopulaFamily.STUDENT_T
    loc_common_ar: bool = False

    def __post_init__(self):
        object.__setattr__(self, "gdp_family", DistributionFamily(self.gdp_family))
        object.__setattr__(
            self, "related_family", DistributionFamily(self.related_family)
        )
        object.__setattr__(self, "copula_family", CopulaFamily(self.copula_family))
        if self.related_frequency not in (MONTHLY, ROLLING_QUARTERLY):
            raise ValueError(f"unknown related_frequency {self.related_frequency!r}")
        if self.scale_aggregation not in (GAUSSIAN_APPROX, DIRECT, NONE):
            raise ValueError(f"unknown scale_aggregation {self.scale_aggregation!r}")
        if self.dynamic_shape and self.related_frequency != ROLLING_QUARTERLY:
            raise ValueError(
                "dynamic shape requires the rolling-quarterly related series"
            )
        if self.dynamic_shape and not (
            self.gdp_family.free_shape and self.related_family.free_shape
        ):
            raise ValueError("dynamic shape requires skewed families on both series")
        if self.scale_aggregation == GAUSSIAN_APPROX:
            if self.gdp_family is not DistributionFamily.NORMAL:
                raise ValueError(
                    "variance aggregation of monthly scales is valid only for "
                    "Gaussian GDP errors"
                )
            if not self.dynamic_scale:
                raise ValueError("gaussian_approx aggregation requires dynamic scale")
        if self.dynamic_scale and self.related_frequency == MONTHLY:
            if self.scale_aggregation != GAUSSIAN_APPROX:
                raise ValueError(
                    "dynamic scale with a monthly related series requires "
                    "gaussian_approx aggregation"
                )
        if not self.dynamic_scale and self.scale_aggregation != NONE:
            raise ValueError("constant-scale models use scale_aggregation 'none'")

    @property
    def related_loc_aggregated(self) -> bool:
        # GDP locations always aggregate over five monthly lags; the related
        # series does too when modelled as rolling quarterly
        return self.related_frequency == ROLLING_QUARTERLY

    @property
    def gdp_scale_aggregated(self) -> bool:
        return self.scale_aggregation == GAUSSIAN_APPROX

    def active_states(self) -> np.ndarray:
        """Boolean mask of states with live dynamics (nonzero gains allowed)."""
        mask = np.zeros(N_STATE, dtype=bool)
        mask[LOC_TREND_GDP : LOC_COMMON + 1] = True
        if self.dynamic_scale:
            mask[SCALE_TREND_GDP : SCALE_COMMON + 1] = True
        if self.dynamic_shape:
            mask[SHAPE_TREND_GDP : SHAPE_COMMON + 1] = True
        return mask


def build_spec(
    label: str,
    copula_family: CopulaFamily | str = CopulaFamily.STUDENT_T,
    loc_common_ar: bool = False,
) -> ModelSpec:
    """Construct one of the six named configurations."""
    table = {
        "DVS_t": dict(
            gdp_family=DistributionFamily.SKEW_T,
            related_family=DistributionFamily.SKEW_T,
            dynamic_scale=True,
            dynamic_shape=True,
            related_frequency=ROLLING_QUARTERLY,
            scale_aggregation=DIRECT,
        ),
        "DVS": dict(
            gdp_family=DistributionFamily.SKEW_NORMAL,
            related_family=DistributionFamily.SKEW_NORMAL,
            dynamic_scale=True,
            dynamic_shape=True,
            related_frequency=ROLLING_QUARTERLY,
            scale_aggregation=DIRECT,
        ),
        "DV_t": dict(
            gdp_family=DistributionFamily.NORMAL,
            related_family=DistributionFamily.STUDENT_T,
            dynamic_scale=True,
            dynamic_shape=False,
            related_frequency=MONTHLY,
            scale_aggregation=GAUSSIAN_APPROX,
        ),
        "DV": dict(
            gdp_family=DistributionFamily.NORMAL,
            related_family=DistributionFamily.NORMAL,
            dynamic_scale=True,
            dynamic_shape=False,
            related_frequency=MONTHLY,
            scale_aggregation=GAUSSIAN_APPROX,
        ),
        "t": dict(
            gdp_family=DistributionFamily.STUDENT_T,
            related_family=DistributionFamily.STUDENT_T,
            dynamic_scale=False,
            dynamic_shape=False,
            related_frequency=MONTHLY,
            scale_aggregation=NONE,
        ),
        "benchmark": dict(
            gdp_family=DistributionFamily.NORMAL,
            related_family=DistributionFamily.NORMAL,
            dynamic_scale=False,
            dynamic_shape=False,
            related_frequency=MONTHLY,
            scale_aggregation=NONE,
        ),
    }
    if label not in table:
        raise ValueError(f"unknown model label {label!r}; choose from {MODEL_LABELS}")
    return ModelSpec(
        label=label,
        copula_family=copula_family,
        loc_common_ar=loc_common_ar,
        **table[label],
    )


def _as_state_vector(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (N_STATE,):
        raise ValueError(f"expected a length-{N_STATE} vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("state vectors must be finite")
    return arr


@dataclass
class ModelParameters:
    """Full parameter set Theta in natural space.

    ``prediction_gains`` (A) drive the state recursion; ``update_gains``
    (D) produce the within-period filtered states used for nowcasting.
    Passing ``update_gains=None`` ties D to A, which is how estimation
    reports fits: a separate D never enters the one-step-ahead likelihood,
    so it cannot be identified by maximum likelihood.

    Tail parameters are per series, equal across both sides of the
    density, with ``inf`` for Gaussian tails. Loadings apply to the
    related series; GDP loadings are fixed at one.
    """

    initial_state: np.ndarray = field(default_factory=lambda: np.zeros(N_STATE))
    prediction_gains: np.ndarray = field(default_factory=lambda: np.zeros(N_STATE))
    update_gains: np.ndarray | None = None
    loc_common_ar: float = 0.0
    scale_common_ar: float = 0.0
    shape_trend_ar: float = 0.0
    shape_common_ar: float = 0.0
    loc_loading: float = 1.0
    scale_loading: float = 1.0
    shape_loading: float = 1.0
    gdp_tail: float = math.inf
    related_tail: float = math.inf
    copula: CopulaSpec = field(default_factory=CopulaSpec)
    weight: float = 1.0 / 3.0

    def __post_init__(self):
        self.initial_state = _as_state_vector(self.initial_state)
        self.prediction_gains = _as_state_vector(self.prediction_gains)
        if np.any(self.prediction_gains < 0.0):
            raise ValueError("prediction gains must be non-negative")
        if self.update_gains is None:
            self.update_gains = self.prediction_gains.copy()
        else:
            self.update_gains = _as_state_vector(self.update_gains)
            if np.any(self.update_gains < 0.0):
                raise ValueError("update gains must be non-negative")
        for name in ("loc_common_ar", "scale_common_ar", "shape_trend_ar",
                     "shape_common_ar"):
            val = float(getattr(self, name))
            setattr(self, name, val)
            if not (-1.0 < val < 1.0):
                raise ValueError(f"{name} must lie strictly inside (-1, 1)")
        for name in ("loc_loading", "scale_loading", "shape_loading"):
            val = float(getattr(self, name))
            setattr(self, name, val)
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
        for name in ("gdp_tail", "related_tail"):
            val = float(getattr(self, name))
            setattr(self, name, val)
            if not (val > 0.0):
                raise ValueError(f"{name} must be positive (inf allowed)")
        self.weight = float(self.weight)
        if not (0.0 < self.weight <= 1.0):
            raise ValueError("weight must lie in (0, 1]")

    def copy(self) -> "ModelParameters":
        return replace(
            self,
            initial_state=self.initial_state.copy(),
            prediction_gains=self.prediction_gains.copy(),
            update_gains=self.update_gains.copy(),
            copula=replace(self.copula),
        )

    def tails(self, series: int) -> float:
        return self.gdp_tail if series == 0 else self.related_tail
