"""Grand-canonical Gibbs ensembles of set partitions: sampling, regime
classification and limit-shape verification."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    DivergentSeries,
    GibbsShapesError,
    InconclusiveLimit,
    NoRoot,
    NonConvergedTail,
    NumericalError,
    RegimeMismatch,
)
from .models import EnergyModel, alpha, make_model  # noqa: F401
from .regime import RegimeReport, classify  # noqa: F401
from .scaling import ScalingPlan, make_plan, solve_kappa, solve_kappa_hat  # noqa: F401
