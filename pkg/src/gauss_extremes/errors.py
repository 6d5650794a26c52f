"""Exception taxonomy.

Validation errors (bad inputs, domain violations) and numerical errors
(things that went wrong while computing) are kept in separate branches so
the CLI can map them to distinct exit codes.
"""


class GaussExtremesError(Exception):
    """Base class for all package errors."""


class ValidationError(GaussExtremesError):
    """Input rejected before any real computation started."""


class NumericalError(GaussExtremesError):
    """Computation started but could not be completed reliably."""


# --- validation branch ---------------------------------------------------


class DimensionMismatch(ValidationError):
    pass


class DomainError(ValidationError):
    """Parameter outside its mathematical domain (e.g. |rho| > 1)."""


class InfeasibleInput(ValidationError):
    """Structurally valid input that admits no solution (e.g. b <= 0)."""


class ModelError(ValidationError):
    """Model parameters violate the standing assumptions."""


class GridError(ValidationError):
    """Simulation grid is malformed (empty, non-increasing, too coarse)."""


class GridMismatch(ValidationError):
    """Two operations that must share a grid were given different ones."""


class MissingConstant(ValidationError):
    """An asymptotic formula needs a constant that was neither supplied
    nor allowed to be estimated."""


class DriftTooSmall(ValidationError):
    """Drift parameter in the non-integrable range: expectation infinite."""


# --- numerical branch ----------------------------------------------------


class NotPSD(NumericalError):
    """Matrix is not positive semidefinite within tolerance."""


class SingularMatrix(NumericalError):
    pass


class NumericalFailure(NumericalError):
    """Generic numerical breakdown (non-finite values, no convergence)."""


class AssumptionViolation(NumericalError):
    """A derived quantity violates a condition the theory requires
    (e.g. a weight that must be positive came out non-positive)."""


class EvaluationError(NumericalError):
    """A user-supplied or derived function could not be evaluated."""


class Divergent(NumericalError):
    """An integral or expectation was detected to be infinite."""


class RootNotBracketed(NumericalError):
    """A root finder could not bracket a sign change."""


class TooManyExtremePoints(NumericalError):
    """Inclusion-exclusion over extreme points would need more than the
    supported number of terms."""


class DimensionUnsupported(NumericalError):
    """Exact routine only implemented up to a fixed dimension."""
