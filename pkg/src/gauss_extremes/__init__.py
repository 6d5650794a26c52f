"""High-exceedance asymptotics for vector-valued Gaussian random fields.

The package is organized around one pipeline:

    covariance model -> local expansion (A-matrices) -> derived quantities
    (weights w, index sets, xi/varkappa/Xi) -> asymptotic double-crossing
    approximations -> Monte Carlo verification.

Supporting layers: guarded linear algebra, the quadratic programming
problem behind the generalized variance, exact fBm simulation, and Monte
Carlo estimators for Pickands/Piterbarg-type constants.
"""

from .errors import (
    GaussExtremesError,
    ValidationError,
    NumericalError,
)
from .qpp import solve_qpp, generalized_variance
from .profile_fbm import fbm_minimizer
from .models import stationary_model, fbm_model, derive, verify_expansion
from .constants import (
    pickands_constant,
    piterbarg_constant,
    generalized_constant,
    orthant_union_integral,
    g_integral,
)
from .asymptotics import (
    stationary_dc_asymptotic,
    fbm_dc_asymptotic,
    general_asymptotic,
    crossing_point_prob,
)
from .mcverify import mc_double_crossing, diagonal_strip_probability, compare_report

__version__ = "0.1.0"

__all__ = [
    "GaussExtremesError",
    "ValidationError",
    "NumericalError",
    "solve_qpp",
    "generalized_variance",
    "fbm_minimizer",
    "stationary_model",
    "fbm_model",
    "derive",
    "verify_expansion",
    "pickands_constant",
    "piterbarg_constant",
    "generalized_constant",
    "orthant_union_integral",
    "g_integral",
    "stationary_dc_asymptotic",
    "fbm_dc_asymptotic",
    "general_asymptotic",
    "crossing_point_prob",
    "mc_double_crossing",
    "diagonal_strip_probability",
    "compare_report",
    "__version__",
]
