"""Covariance models for the double crossing and their local expansions.

Two concrete families are provided.

* ``stationary_model``: a stationary process with correlation rho(|t-s|),
  rho decreasing towards the horizon, levels (a, -b) attained at opposite
  ends of [0, T].  The local pair is (X(tau1), -X(T - tau2)).

* ``fbm_model``: fractional Brownian motion with Hurst index H, levels
  (a, -b) with a >= b, minimizer at (T, t_star).  The local pair is
  (X(T - tau1), -X(t_star + tau2)).

Near the minimizing corner both models admit the structured expansion

    Sigma - R(t, s) = sum_i [A1_i t_i^{beta'_i} + A2_i t_i^{beta_i}]
                    + (same terms in s, transposed)
                    + sum_i S_{alpha_i, A5_i}(t_i - s_i)
                    + sum_{i,j in F} A6_ij t_i^{beta_i/2} s_j^{beta_j/2}
                    + o(sum_i [t_i^{beta_i} + s_i^{beta_i} + |t_i-s_i|^{alpha_i}])

on the positive orthant, where F = {i : 2 beta'_i = beta_i} collects the
coordinates whose first-order terms interact at the quadratic scale.
``derive`` turns an expansion into the quantities the asymptotic theory
consumes (index sets, xi, varkappa, the interaction matrix Xi, zeta) and
``verify_expansion`` checks the expansion against the exact kernel on a
shrinking probe grid.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    AssumptionViolation,
    DimensionMismatch,
    DomainError,
    ModelError,
    NotPSD,
)
from .linalg import factor_block_psd
from .profile_fbm import fbm_minimizer
from .qpp import solve_qpp

_CLASS_TOL = 1e-12


def _dec(x):
    # exponents travel through JSON as shortest round-trip decimal strings
    return repr(float(x))


def s_matrix(alpha, V, t):
    """One-sided structure matrix S_{alpha,V}(t) = |t|^alpha (V if t >= 0 else V').

    The transpose convention for negative arguments makes t -> S(t) the
    covariance increment structure of a vector process with stationary
    increments: R(t, s) = S(t) + S(-s) - S(t - s).
    """
    if not (0.0 < alpha <= 2.0):
        raise DomainError("alpha must lie in (0, 2], got %r" % (alpha,))
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise DimensionMismatch("V must be square")
    mat = V if t >= 0 else V.T
    return np.abs(t) ** alpha * mat


def r_fbm_matrix(alpha, V, t, s):
    """Covariance R(t, s) of the vector-fBm-type process with structure S_{alpha,V}."""
    return s_matrix(alpha, V, t) + s_matrix(alpha, V, -s) - s_matrix(alpha, V, t - s)


@dataclass
class ExpansionData:
    """Coefficients of the local expansion at the minimizing corner.

    A1, A2, A5 have shape (n, d, d); A6 has shape (n, n, d, d) and is zero
    outside F x F.  alpha, beta, beta_prime, gamma are the per-coordinate
    exponent vectors, sigma the d x d covariance at the corner, b the level
    vector.
    """

    A1: np.ndarray
    A2: np.ndarray
    A5: np.ndarray
    A6: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    beta_prime: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    b: np.ndarray

    @property
    def n(self):
        return self.A2.shape[0]

    @property
    def d(self):
        return self.sigma.shape[0]

    def to_dict(self):
        return {
            "A1": self.A1.tolist(),
            "A2": self.A2.tolist(),
            "A5": self.A5.tolist(),
            "A6": self.A6.tolist(),
            "alpha": [_dec(x) for x in self.alpha],
            "beta": [_dec(x) for x in self.beta],
            "beta_prime": [_dec(x) for x in self.beta_prime],
            "gamma": [_dec(x) for x in self.gamma],
            "sigma": self.sigma.tolist(),
            "b": self.b.tolist(),
        }


class CovModel:
    """A double-crossing model: global scalar kernel plus local expansion.

    Attributes of interest: kind ("stationary" or "fbm"), a, b, T, corner
    (the minimizing pair of times), expansion (ExpansionData at the corner),
    sigma_star, b_vec, params (kind-specific scalars), mu (minimizer
    multiplicity, fbm only).
    """

    def __init__(self, kind, a, b, T, corner, expansion, params, scalar_kernel):
        self.kind = kind
        self.a = float(a)
        self.b = float(b)
        self.T = float(T)
        self.corner = tuple(float(c) for c in corner)
        self.expansion = expansion
        self.params = params
        self._r = scalar_kernel
        self.sigma_star = expansion.sigma
        self.b_vec = expansion.b
        self.mu = params.get("mu", 1)

    def scalar_cov(self, t, s):
        """Covariance of the underlying scalar process at times t, s."""
        return self._r(t, s)

    def scalar_cov_matrix(self, grid):
        """Full covariance matrix of the scalar process on a 1-d grid."""
        g = np.asarray(grid, dtype=float)
        return self._r(g[:, None], g[None, :])

    def local_cov(self, t, s):
        """d x d covariance of the local pair at inward coordinates t, s."""
        pt = self._positions(t)
        ps = self._positions(s)
        sg = self._signs
        out = np.empty((2, 2))
        for k in range(2):
            for l in range(2):
                out[k, l] = sg[k] * sg[l] * self._r(pt[k], ps[l])
        return out

    def _positions(self, tau):
        t1, t2 = float(tau[0]), float(tau[1])
        if self.kind == "stationary":
            return (t1, self.T - t2)
        return (self.T - t1, self.corner[1] + t2)

    @property
    def _signs(self):
        return (1.0, -1.0)

    def describe(self):
        scalars = {
            k: v for k, v in self.params.items() if isinstance(v, (int, float, str))
        }
        return {
            "kind": self.kind,
            "a": self.a,
            "b": self.b,
            "T": self.T,
            "corner": list(self.corner),
            "params": scalars,
        }


def stationary_model(rho, T, a, b, alpha, vartheta, rho_prime_T=None, name=None):
    """Build a stationary double-crossing model from a correlation function.

    Parameters
    ----------
    rho : callable, correlation rho(h) with rho(0) = 1; must satisfy
        rho(T) in (0, 1) and rho'(T) < 0 so the extreme pairs sit at the
        corners (0, T) and (T, 0) of the parameter square.
    alpha, vartheta : local behaviour 1 - rho(h) = vartheta h^alpha + o(h^alpha).
    rho_prime_T : analytic derivative at T if available; otherwise a central
        finite difference with step 1e-6 T is used.
    """
    if T <= 0 or a <= 0 or b <= 0:
        raise DomainError("T, a, b must be positive")
    if not (0.0 < alpha <= 2.0):
        raise DomainError("local exponent alpha must lie in (0, 2]")
    if vartheta <= 0:
        raise DomainError("vartheta must be positive")
    rho0 = float(rho(0.0))
    if abs(rho0 - 1.0) > 1e-10:
        raise ModelError("rho(0) must equal 1, got %r" % (rho0,))
    rT = float(rho(T))
    if not (0.0 < rT < 1.0):
        raise ModelError("rho(T) must lie in (0, 1), got %r" % (rT,))
    if rho_prime_T is None:
        h = 1e-6 * T
        rho_prime_T = (float(rho(T + h)) - float(rho(T - h))) / (2.0 * h)
    rho_prime_T = float(rho_prime_T)
    if rho_prime_T >= 0.0:
        raise ModelError(
            "rho'(T) must be negative (corner dominance), got %r" % (rho_prime_T,)
        )

    sigma = np.array([[1.0, -rT], [-rT, 1.0]])
    b_vec = np.array([float(a), float(b)])
    n, d = 2, 2
    A1 = np.zeros((n, d, d))
    A2 = np.zeros((n, d, d))
    A2[0] = -rho_prime_T * np.array([[0.0, 1.0], [0.0, 0.0]])
    A2[1] = -rho_prime_T * np.array([[0.0, 0.0], [1.0, 0.0]])
    A5 = np.zeros((n, d, d))
    A5[0] = vartheta * np.diag([1.0, 0.0])
    A5[1] = vartheta * np.diag([0.0, 1.0])
    A6 = np.zeros((n, n, d, d))
    expansion = ExpansionData(
        A1=A1,
        A2=A2,
        A5=A5,
        A6=A6,
        alpha=np.array([alpha, alpha]),
        beta=np.array([1.0, 1.0]),
        beta_prime=np.array([1.0, 1.0]),
        gamma=np.array([min(alpha, 1.0)] * 2),
        sigma=sigma,
        b=b_vec,
    )
    params = {
        "alpha": float(alpha),
        "vartheta": float(vartheta),
        "rho_T": rT,
        "rho_prime_T": rho_prime_T,
        "rho": rho,
        "name": name or "stationary",
    }

    def kernel(t, s):
        return rho(np.abs(np.asarray(t, dtype=float) - np.asarray(s, dtype=float)))

    return CovModel("stationary", a, b, T, (0.0, T), expansion, params, kernel)


def fbm_model(H, T, a, b):
    """Build the fBm double-crossing model with levels (a, -b), a >= b.

    The probability is symmetric in (a, b) (replace X by -X), so the
    convention a >= b loses nothing; a ModelError asks the caller to swap
    when it is violated rather than silently relabeling.
    """
    if not (0.0 < H < 1.0):
        raise DomainError("H must lie in (0, 1)")
    if T <= 0 or a <= 0 or b <= 0:
        raise DomainError("T, a, b must be positive")
    if b > a:
        raise ModelError(
            "fbm_model assumes a >= b; swap the levels (the event is symmetric)"
        )
    m = fbm_minimizer(H, b / a, a=a, T=T)
    t_star = m.t_star
    twoH = 2.0 * H

    def r(t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        return 0.5 * (
            np.abs(t) ** twoH + np.abs(s) ** twoH - np.abs(t - s) ** twoH
        )

    r_star = float(r(T, t_star))
    sigma = np.array([[T ** twoH, -r_star], [-r_star, t_star ** twoH]])
    b_vec = np.array([float(a), float(b)])

    n, d = 2, 2
    u1 = T - t_star
    A1 = np.zeros((n, d, d))
    A2 = np.zeros((n, d, d))
    A5 = np.zeros((n, d, d))
    A6 = np.zeros((n, n, d, d))
    # first coordinate: t1 = T - tau1 moves the up-crossing leg
    A2[0] = H * np.array(
        [[T ** (twoH - 1.0), u1 ** (twoH - 1.0) - T ** (twoH - 1.0)], [0.0, 0.0]]
    )
    # second coordinate: t2 = t_star + tau2 moves the down-crossing leg;
    # its first-order part survives at beta' = 1 and feeds the F-block
    A1[1] = H * np.array(
        [
            [0.0, 0.0],
            [t_star ** (twoH - 1.0) + u1 ** (twoH - 1.0), -t_star ** (twoH - 1.0)],
        ]
    )
    A2[1] = H * (H - 0.5) * np.array(
        [
            [0.0, 0.0],
            [t_star ** (twoH - 2.0) - u1 ** (twoH - 2.0), -t_star ** (twoH - 2.0)],
        ]
    )
    A5[0] = 0.5 * np.diag([1.0, 0.0])
    A5[1] = 0.5 * np.diag([0.0, 1.0])

    expansion = ExpansionData(
        A1=A1,
        A2=A2,
        A5=A5,
        A6=A6,
        alpha=np.array([twoH, twoH]),
        beta=np.array([1.0, 2.0]),
        beta_prime=np.array([0.75, 1.0]),
        gamma=np.array([min(twoH, 1.0)] * 2),
        sigma=sigma,
        b=b_vec,
    )
    mu = 2 if abs(a - b) <= 1e-12 * max(a, b) else 1
    params = {
        "H": float(H),
        "t_star": t_star,
        "s_star": m.s_star,
        "kappa1": m.kappa1,
        "kappa2": m.kappa2,
        "D_value": m.D_value,
        "mu": mu,
    }
    return CovModel("fbm", a, b, T, (T, t_star), expansion, params, r)


@dataclass
class DerivedData:
    """Quantities the asymptotic theory consumes, derived from an expansion."""

    expansion: ExpansionData
    w: np.ndarray
    b_tilde: np.ndarray
    active_set: tuple
    value: float
    sets: dict
    nu: np.ndarray
    xi: np.ndarray
    varkappa: np.ndarray
    Xi: np.ndarray
    D: np.ndarray
    zeta: float
    checks: dict

    def to_dict(self):
        return {
            "w": self.w.tolist(),
            "b_tilde": self.b_tilde.tolist(),
            "active_set": list(self.active_set),
            "sigma_minus2": self.value,
            "sets": {k: list(v) for k, v in self.sets.items()},
            "nu": [_dec(x) for x in self.nu],
            "xi": self.xi.tolist(),
            "varkappa": self.varkappa.tolist(),
            "Xi": self.Xi.tolist(),
            "zeta": self.zeta,
            "checks": self.checks,
        }


def derive(model_or_expansion, strict=True):
    """Derive index sets and interaction quantities from a local expansion.

    Computes the weight vector w of the corner optimization, classifies each
    time coordinate by alpha_i vs beta_i into

        I (alpha < beta): rough coordinates, contribute u-power and a
            one-coordinate constant,
        J (alpha = beta): balanced coordinates, contribute a drifted constant,
        K (alpha > beta): smooth coordinates, contribute 1,

    and F = {2 beta' = beta}, whose first-order terms build the quadratic
    interaction D_ij = A6_ij + A1_i Sigma^{-1} A1_j'.  Outputs xi_i = w'A2_i w,
    varkappa_i = w'A5_i w, Xi_ij = w'(2 A2_i 1{i=j} + D_ij 1{i,j in F}) w and
    zeta = sum_I (2/alpha_i - 2/beta_i).

    With strict=True (default) the structural assumptions are enforced:
    varkappa > 0 on I u J, xi > 0 on J u K, Xi_ii > 0 on I, A1_i w = 0 for
    all i, and the F-block of D positive semidefinite.  Violations raise
    AssumptionViolation; strict=False records them in checks instead.
    """
    e = model_or_expansion.expansion if isinstance(model_or_expansion, CovModel) else model_or_expansion
    n, d = e.n, e.d
    sol = solve_qpp(e.sigma, e.b)
    w = sol.w

    I, J, K = [], [], []
    for i in range(n):
        if e.alpha[i] < e.beta[i] - _CLASS_TOL:
            I.append(i)
        elif abs(e.alpha[i] - e.beta[i]) <= _CLASS_TOL:
            J.append(i)
        else:
            K.append(i)
    F = [i for i in range(n) if abs(2.0 * e.beta_prime[i] - e.beta[i]) <= _CLASS_TOL]

    sigma_inv = np.linalg.inv(e.sigma)
    D = np.zeros((n, n, d, d))
    for i in F:
        for j in F:
            D[i, j] = e.A6[i, j] + e.A1[i] @ sigma_inv @ e.A1[j].T

    xi = np.array([w @ e.A2[i] @ w for i in range(n)])
    varkappa = np.array([w @ e.A5[i] @ w for i in range(n)])
    Xi = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                Xi[i, i] = 2.0 * xi[i]
            if i in F and j in F:
                Xi[i, j] += w @ D[i, j] @ w
    nu = np.minimum(e.alpha, e.beta)
    zeta = float(sum(2.0 / e.alpha[i] - 2.0 / e.beta[i] for i in I))

    failures = []
    a1_resid = [float(np.max(np.abs(e.A1[i] @ w))) for i in range(n)]
    a1_scale = 1e-8 * (1.0 + np.max(np.abs(e.A1)) * np.max(np.abs(w)))
    for i in range(n):
        if a1_resid[i] > a1_scale:
            failures.append("A1[%d] w = %g does not vanish" % (i, a1_resid[i]))
    for i in I + J:
        if varkappa[i] <= 0:
            failures.append("varkappa[%d] = %g is not positive" % (i, varkappa[i]))
    for i in J + K:
        if xi[i] <= 0:
            failures.append("xi[%d] = %g is not positive" % (i, xi[i]))
    for i in I:
        if Xi[i, i] <= 0:
            failures.append("Xi[%d,%d] = %g is not positive" % (i, i, Xi[i, i]))
    d_psd = True
    if F:
        try:
            factor_block_psd(D[np.ix_(F, F)])
        except NotPSD:
            d_psd = False
            failures.append("interaction block D restricted to F is not PSD")

    checks = {
        "passed": not failures,
        "failures": failures,
        "a1_w_residual": a1_resid,
        "d_psd": d_psd,
    }
    if strict and failures:
        raise AssumptionViolation("; ".join(failures))

    return DerivedData(
        expansion=e,
        w=w,
        b_tilde=sol.b_tilde,
        active_set=sol.active_set,
        value=sol.value,
        sets={"I": tuple(I), "J": tuple(J), "K": tuple(K), "F": tuple(F)},
        nu=nu,
        xi=xi,
        varkappa=varkappa,
        Xi=Xi,
        D=D,
        zeta=zeta,
        checks=checks,
    )


def expansion_prediction(e, t, s):
    """Evaluate the structured expansion of Sigma - R(t, s) at local (t, s)."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros((e.d, e.d))
    for i in range(e.n):
        term_t = e.A1[i] * t[i] ** e.beta_prime[i] + e.A2[i] * t[i] ** e.beta[i]
        term_s = e.A1[i] * s[i] ** e.beta_prime[i] + e.A2[i] * s[i] ** e.beta[i]
        out += term_t + term_s.T
        out += s_matrix(e.alpha[i], e.A5[i], t[i] - s[i])
    for i in range(e.n):
        for j in range(e.n):
            if np.any(e.A6[i, j]):
                out += e.A6[i, j] * t[i] ** (e.beta[i] / 2.0) * s[j] ** (e.beta[j] / 2.0)
    return out


def verify_expansion(model, expansion=None, probe=None):
    """Check an expansion against the exact kernel on shrinking probe sets.

    Draws random direction pairs in the positive orthant, scales them by
    h0 * 2^{-k} for k = 0..levels-1, and compares Sigma - R(t, s) with the
    expansion prediction.  The residual normalized by the expansion scale
    sum_i (t_i^beta + s_i^beta + |t_i - s_i|^alpha) must vanish in the limit;
    the report PASSes when that ratio decreases across levels and ends below
    0.6 of its starting value (or when the expansion is exact to rounding).
    """
    e = expansion if expansion is not None else model.expansion
    opts = {"h0": 0.05, "levels": 4, "n_dirs": 12, "seed": 0}
    if probe:
        opts.update(probe)
    rng = np.random.default_rng(opts["seed"])
    dirs = rng.uniform(0.25, 1.0, size=(opts["n_dirs"], 2, e.n))
    # structured probes: single-coordinate moves and the diagonal t = s
    extra = np.zeros((2 * e.n + 1, 2, e.n))
    for i in range(e.n):
        extra[2 * i, 0, i] = 1.0
        extra[2 * i + 1, 1, i] = 1.0
    extra[-1, :, :] = 0.5
    dirs = np.concatenate([dirs, extra], axis=0)

    hs, residuals, normalized = [], [], []
    for k in range(opts["levels"]):
        h = opts["h0"] * 2.0 ** (-k)
        worst = 0.0
        scale = 0.0
        for ut, us in dirs:
            t, s = h * ut, h * us
            exact = e.sigma - model.local_cov(t, s)
            pred = expansion_prediction(e, t, s)
            worst = max(worst, float(np.max(np.abs(exact - pred))))
            scale = max(
                scale,
                float(
                    np.sum(
                        t ** e.beta + s ** e.beta + np.abs(t - s) ** e.alpha
                    )
                ),
            )
        hs.append(h)
        residuals.append(worst)
        normalized.append(worst / scale)

    exact_fit = max(residuals) <= 1e-13 * (1.0 + float(np.max(np.abs(e.sigma))))
    decreasing = all(
        normalized[k + 1] <= normalized[k] * 1.05 for k in range(len(normalized) - 1)
    )
    passed = exact_fit or (decreasing and normalized[-1] <= 0.6 * normalized[0])
    return {
        "h": hs,
        "residual": residuals,
        "normalized": normalized,
        "exact": bool(exact_fit),
        "passed": bool(passed),
    }
