"""Monte Carlo estimation of Berman functions and Pickands constants.

The processes considered are log-Gaussian spectral processes
``Z(t) = exp(V(t) - sigma2_V(t) / 2)`` built on a centered Gaussian ``V``
with stationary increments.
"""

__version__ = "0.1.0"

from .analytic import (
    BoundSet,
    berman_closed_h1,
    berman_finite_window_h1,
    bounds_sandwich,
    expected_sojourn,
    fbm_expected_sojourn_closed,
    log_asymptote_ratio,
    markov_upper_bound,
    mgf_upper_bound,
    normal_pdf,
    normal_sf,
)
from .estimators import (
    Estimate,
    estimate_berman_direct,
    estimate_berman_spectral,
    estimate_pickands,
    mean_ci,
)
from .paths import GridSpec, PathBatch, exponential_draws, sample_paths
from .simulation import BermanEstimator, BudgetExceeded
from .sojourn import level_for_sojourn, sojourn_time
from .variance_models import VarianceModel, check_growth_conditions, fbm, from_spec, integrated_ou, power_table

__all__ = [
    "BermanEstimator",
    "BoundSet",
    "BudgetExceeded",
    "Estimate",
    "GridSpec",
    "PathBatch",
    "VarianceModel",
    "berman_closed_h1",
    "berman_finite_window_h1",
    "bounds_sandwich",
    "check_growth_conditions",
    "estimate_berman_direct",
    "estimate_berman_spectral",
    "estimate_pickands",
    "expected_sojourn",
    "exponential_draws",
    "fbm",
    "fbm_expected_sojourn_closed",
    "from_spec",
    "integrated_ou",
    "level_for_sojourn",
    "log_asymptote_ratio",
    "markov_upper_bound",
    "mean_ci",
    "mgf_upper_bound",
    "normal_pdf",
    "normal_sf",
    "power_table",
    "sample_paths",
    "sojourn_time",
]
