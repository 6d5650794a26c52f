"""Guarded linear algebra helpers shared across the package."""

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .errors import DimensionMismatch, DomainError, NotPSD


def cholesky_psd(a, base_jitter=1e-12, max_attempts=6):
    """Cholesky factor of a symmetric PSD matrix with jitter escalation.

    Tries a plain factorization first; on failure adds eps * I with
    eps = base_jitter * 10^k * max(1, mean diagonal), k = 0, 1, ...
    (max_attempts tries in total, the plain one included).

    Returns ``(L, jitter_used)`` with ``L`` lower triangular. Raises
    NotPSD when even the largest jitter does not make the matrix
    factorizable.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-10 * (1.0 + np.abs(a).max())):
        raise DomainError("matrix is not symmetric")
    scale = max(1.0, float(np.mean(np.diag(a))))
    jitters = [0.0] + [base_jitter * 10**k * scale for k in range(max_attempts - 1)]
    for eps in jitters:
        try:
            lower = np.linalg.cholesky(a + eps * np.eye(a.shape[0]))
            return lower, eps
        except np.linalg.LinAlgError:
            continue
    raise NotPSD(
        f"matrix not factorizable even with jitter {jitters[-1]:.3e}"
    )


def factor_block_psd(blocks, tol=1e-10):
    """Factor a PSD block matrix D into C with D_ij = sum_k C_ik C_jk^T.

    ``blocks`` has shape (m, m, d, d): an m x m grid of d x d blocks that,
    flattened to (m*d, m*d), forms one symmetric PSD matrix. The factor
    comes from a plain Cholesky when possible, otherwise from an
    eigenvalue clip (eigenvalues >= -tol * scale are clipped to zero;
    anything lower raises NotPSD). Returns C with shape (m, m, d, d).
    """
    blocks = np.asarray(blocks, dtype=float)
    if blocks.ndim != 4 or blocks.shape[0] != blocks.shape[1] or \
            blocks.shape[2] != blocks.shape[3]:
        raise DimensionMismatch(f"expected (m, m, d, d) blocks, got {blocks.shape}")
    m, _, d, _ = blocks.shape
    flat = blocks.transpose(0, 2, 1, 3).reshape(m * d, m * d)
    if not np.allclose(flat, flat.T, atol=1e-10 * (1.0 + np.abs(flat).max())):
        raise DomainError("block matrix is not symmetric")
    scale = max(1.0, float(np.abs(np.diag(flat)).max()))
    try:
        factor = np.linalg.cholesky(flat)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(flat)
        if eigvals.min() < -tol * scale:
            raise NotPSD(
                f"smallest eigenvalue {eigvals.min():.3e} below -{tol:.0e} * scale"
            )
        factor = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    resid = np.linalg.norm(factor @ factor.T - flat)
    if resid > 1e-10 * (1.0 + np.linalg.norm(flat)):
        raise NotPSD(f"factor reconstruction residual {resid:.3e} too large")
    return factor.reshape(m, d, m, d).transpose(0, 2, 1, 3)


def bvn_upper(x1, x2, rho):
    """P{X1 > x1, X2 > x2} for standard bivariate normal, correlation rho.

    Computed as the one-dimensional integral

        int_{x1}^inf phi(z) Phibar((x2 - rho z) / sqrt(1 - rho^2)) dz

    with absolute error <= 1e-10 for |rho| <= 0.999. The degenerate cases
    |rho| = 1 reduce to one-dimensional tail probabilities.
    """
    x1, x2, rho = float(x1), float(x2), float(rho)
    if not (np.isfinite(x1) and np.isfinite(x2)) and not (
        x1 == -np.inf or x2 == -np.inf or x1 == np.inf or x2 == np.inf
    ):
        raise DomainError("crossing levels must be real numbers")
    if abs(rho) > 1.0:
        raise DomainError(f"correlation {rho} outside [-1, 1]")
    if x1 == np.inf or x2 == np.inf:
        return 0.0
    if rho == 0.0:
        return float(norm.sf(x1) * norm.sf(x2))
    if rho == 1.0:
        return float(norm.sf(max(x1, x2)))
    if rho == -1.0:
        # X2 = -X1: need X1 > x1 and -X1 > x2
        return float(max(0.0, norm.cdf(-x2) - norm.cdf(x1)))
    if x1 == -np.inf:
        return float(norm.sf(x2))
    if x2 == -np.inf:
        return float(norm.sf(x1))
    s = np.sqrt(1.0 - rho * rho)

    def integrand(z):
        return norm.pdf(z) * norm.sf((x2 - rho * z) / s)

    # Integrating from x1; beyond x1 + 40 the normal density is < 1e-300.
    upper = max(x1 + 40.0, 40.0)
    val, _ = integrate.quad(integrand, x1, upper, epsabs=1e-12, epsrel=1e-11,
                            limit=200)
    return float(min(max(val, 0.0), 1.0))
