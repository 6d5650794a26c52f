"""Quadratic programming problem behind the generalized variance.

Solves

    minimize    x' Sigma^{-1} x
    subject to  x >= b   (componentwise)

for a positive definite covariance matrix Sigma.  The minimizer b_tilde is
unique and is characterized by an active index set I (where b_tilde equals b)
through the conditions

    b_tilde_I = b_I,
    b_tilde_J = Sigma_JI Sigma_II^{-1} b_I >= b_J,
    w_I = Sigma_II^{-1} b_I > 0,   w_J = 0,

with optimal value b_I' Sigma_II^{-1} b_I.  The weight vector w extends
Sigma_II^{-1} b_I by zeros on the inactive set J and satisfies
Sigma w = b_tilde.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionUnsupported,
    InfeasibleInput,
    NumericalFailure,
    SingularMatrix,
)

# Enumerating active sets is exponential in the dimension; the use cases here
# are all d <= 3, so a hard cap keeps accidental misuse from hanging.
_DIM_HARD_CAP = 20
_DIM_WARN = 12

_SLACK_TOL = 1e-10
_POS_TOL = 1e-12


@dataclass
class QppSolution:
    """Solution certificate for the constrained quadratic problem."""

    b_tilde: np.ndarray
    active_set: tuple
    inactive_set: tuple
    w: np.ndarray
    value: float
    tied_sets: list = field(default_factory=list)

    def as_dict(self):
        return {
            "b_tilde": self.b_tilde.tolist(),
            "active_set": list(self.active_set),
            "inactive_set": list(self.inactive_set),
            "w": self.w.tolist(),
            "value": self.value,
            "tied_sets": [list(s) for s in self.tied_sets],
        }


def _validate(sigma, b):
    sigma = np.asarray(sigma, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionMismatch("sigma must be a square matrix")
    d = sigma.shape[0]
    if b.shape[0] != d:
        raise DimensionMismatch(
            "threshold vector has length %d, expected %d" % (b.shape[0], d)
        )
    if d > _DIM_HARD_CAP:
        raise DimensionUnsupported(
            "active-set enumeration not supported beyond d=%d" % _DIM_HARD_CAP
        )
    if not np.all(np.isfinite(sigma)) or not np.all(np.isfinite(b)):
        raise InfeasibleInput("sigma and b must be finite")
    if np.max(np.abs(sigma - sigma.T)) > 1e-10 * (1.0 + np.max(np.abs(sigma))):
        raise DimensionMismatch("sigma must be symmetric")
    return sigma, b, d


def solve_qpp(sigma, b):
    """Solve min x'Sigma^{-1}x over x >= b by enumerating active sets.

    Candidate active sets are visited by increasing cardinality, then
    lexicographically, and the first subset whose KKT certificate checks out
    is returned.  Ties (other subsets producing the same optimal value within
    1e-10 relative) are recorded on the solution for diagnostic purposes.

    Raises InfeasibleInput when b has no positive component (the origin is
    then feasible and the minimum is trivially zero, outside the scope of
    this solver) and NumericalFailure when no subset passes certification.
    """
    sigma, b, d = _validate(sigma, b)
    if np.all(b <= 0):
        raise InfeasibleInput(
            "b must have at least one positive component; got b <= 0"
        )
    if d > _DIM_WARN:
        import warnings

        warnings.warn(
            "solve_qpp enumerates 2^d - 1 active sets; d=%d will be slow" % d
        )

    # Reject a singular full covariance outright: the generalized variance
    # is not defined without Sigma^{-1}.
    sign, _ = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise SingularMatrix("sigma must be positive definite")

    indices = range(d)
    best = None
    tied = []
    for size in range(1, d + 1):
        for subset in combinations(indices, size):
            sol = _certify(sigma, b, d, subset)
            if sol is None:
                continue
            if best is None:
                best = sol
            elif abs(sol.value - best.value) <= 1e-10 * max(1.0, abs(best.value)):
                tied.append(subset)
            # Keep scanning: later subsets can only tie, never beat the
            # certified optimum, and we want the tie record.
        if best is not None and size >= len(best.active_set):
            # Larger supersets of a certified optimum cannot certify as
            # well unless degenerate; finish the current size for ties
            # and stop.
            break
    if best is None:
        raise NumericalFailure("no active set produced a valid KKT certificate")
    best.tied_sets = tied
    return best


def _certify(sigma, b, d, subset):
    """Try one active set; return a QppSolution if KKT holds, else None."""
    I = np.array(subset, dtype=int)
    J = np.array([j for j in range(d) if j not in subset], dtype=int)
    sigma_II = sigma[np.ix_(I, I)]
    try:
        w_I = np.linalg.solve(sigma_II, b[I])
    except np.linalg.LinAlgError:
        return None
    # Machine-level sanity on the solve (near-singular blocks slip through).
    if not np.all(np.isfinite(w_I)):
        return None
    resid = sigma_II @ w_I - b[I]
    if np.max(np.abs(resid)) > 1e-8 * (1.0 + np.max(np.abs(b[I]))):
        return None
    if np.any(w_I <= _POS_TOL):
        return None
    b_tilde = np.array(b, dtype=float)
    if J.size:
        b_tilde[J] = sigma[np.ix_(J, I)] @ w_I
        if np.any(b_tilde[J] < b[J] - _SLACK_TOL):
            return None
    w = np.zeros(d)
    w[I] = w_I
    value = float(b[I] @ w_I)
    return QppSolution(
        b_tilde=b_tilde,
        active_set=tuple(int(i) for i in I),
        inactive_set=tuple(int(j) for j in J),
        w=w,
        value=value,
    )


def generalized_variance(sigma, b):
    """Return (sigma_b^{-2}, solution) for the level vector b.

    sigma_b^{-2} = min_{x >= b} x'Sigma^{-1}x is the generalized variance
    exponent governing P{X > u b} for a centered Gaussian vector with
    covariance Sigma.
    """
    sol = solve_qpp(sigma, b)
    return sol.value, sol
