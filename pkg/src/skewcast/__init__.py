"""Bivariate mixed-frequency density nowcasting with score-driven skewness.

GDP growth and a monthly related indicator are modeled jointly with
asymmetric Student-t margins whose location, scale and shape follow
score-driven common factors, coupled through a static copula. The
package covers maximum likelihood estimation with a weighted objective,
simulation-based density nowcasts on ragged-edge data and a pseudo real
time backtest harness.
"""

from . import asymmetric_t, copula
from ._core import HAVE_COMPILED, USE_COMPILED
from .asymmetric_t import ASTParams, DistributionFamily
from .copula import CopulaFamily, CopulaSpec
from .data import (
    ObservationPanel,
    Series,
    Vintage,
    align_panel,
    load_vintage,
    load_vintages,
    log_diff,
    nowcast_schedule,
    write_vintage,
)
from .dynamics import (
    FilterResult,
    LagBuffers,
    Transition,
    build_transition,
    init_buffers,
    link_parameters,
    run_filter,
)
from .estimation import EstimationError, FitResult, estimate
from .evaluation import (
    BacktestConfig,
    BacktestReport,
    backtest,
    log_score,
    mae,
)
from .modelspec import (
    MODEL_LABELS,
    ModelParameters,
    ModelSpec,
    build_spec,
)
from .nowcast import DensityNowcast, density_nowcast, interval, point_nowcast
from .synthetic import SimulationConfig, make_pseudo_vintages, simulate_panel

__version__ = "0.1.0"

__all__ = [
    "ASTParams",
    "BacktestConfig",
    "BacktestReport",
    "CopulaFamily",
    "CopulaSpec",
    "DensityNowcast",
    "DistributionFamily",
    "EstimationError",
    "FilterResult",
    "FitResult",
    "HAVE_COMPILED",
    "LagBuffers",
    "MODEL_LABELS",
    "ModelParameters",
    "ModelSpec",
    "ObservationPanel",
    "Series",
    "SimulationConfig",
    "Transition",
    "USE_COMPILED",
    "Vintage",
    "align_panel",
    "asymmetric_t",
    "backtest",
    "build_spec",
    "build_transition",
    "copula",
    "density_nowcast",
    "estimate",
    "init_buffers",
    "interval",
    "link_parameters",
    "load_vintage",
    "load_vintages",
    "log_diff",
    "log_score",
    "mae",
    "make_pseudo_vintages",
    "nowcast_schedule",
    "point_nowcast",
    "run_filter",
    "simulate_panel",
    "write_vintage",
    "__version__",
]
