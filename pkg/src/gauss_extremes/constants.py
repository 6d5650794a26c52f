"""Constants of the asymptotic expansion: Monte Carlo and quadrature parts.

Three stochastic constants appear in the double-crossing asymptotics:

* the classical one-parameter constant (Pickands type), estimated through
  the max-over-integral ratio representation, which is bias-free in the
  window size and has bounded per-path weights;
* the drifted-Brownian constant (Piterbarg type) (1+lam)/lam, estimated
  from exact suprema of drifted Brownian motion via interval-wise bridge
  maxima;
* the generalized constant of a derived local field, estimated by the
  orthant-union integral of per-path Pareto frontiers on a product grid.

The deterministic factor G(beta, Xi) integrates the corner envelope and is
evaluated in closed form or by quadrature.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .errors import (
    DimensionUnsupported,
    Divergent,
    DomainError,
    DriftTooSmall,
    GridError,
    TooManyExtremePoints,
)
from .simulate import (
    _ROLE_BRIDGE,
    _ROLE_LIMIT,
    _ROLE_PATHS,
    CHUNK,
    FbmGridEngine,
    LimitFieldSampler,
    _run_chunks,
    resolve_seed,
    rng_stream,
)


@dataclass
class EstimateRecord:
    """A Monte Carlo estimate with its configuration attached."""

    value: float
    std_err: float
    config: dict
    method: str
    convergence: dict = None

    def to_dict(self):
        return {
            "value": self.value,
            "std_err": self.std_err,
            "config": self.config,
            "method": self.method,
            "convergence": self.convergence,
        }


def _pareto_front(pts):
    """Maximal points of a finite set (componentwise partial order)."""
    pts = np.asarray(pts, dtype=float)
    m, d = pts.shape
    if m <= 1:
        return pts
    if d == 1:
        return pts[[np.argmax(pts[:, 0])]]
    if d == 2:
        order = np.argsort(-pts[:, 0], kind="stable")
        y = pts[order, 1]
        run = np.concatenate([[-np.inf], np.maximum.accumulate(y[:-1])])
        return pts[order[y > run]]
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if not keep[i]:
            continue
        dominated = np.all(pts >= pts[i], axis=1) & np.any(pts > pts[i], axis=1)
        dup = np.all(pts == pts[i], axis=1)
        dup[i] = False
        if dominated.any() or dup[:i].any():
            keep[i] = False
    return pts[keep]


def _union_integral_sorted(pts):
    # pts are Pareto-maximal; integrate exp(sum x) over the union of
    # down-sets {x < p} by sweeping the last coordinate
    m, d = pts.shape
    if d == 1:
        return float(np.exp(pts[:, 0].max()))
    if d == 2:
        order = np.argsort(pts[:, 0])
        xs = pts[order, 0]
        ys = pts[order, 1]
        ex = np.exp(xs)
        prev = np.concatenate([[0.0], ex[:-1]])
        return float(np.sum((ex - prev) * np.exp(ys)))
    order = np.argsort(pts[:, -1])
    z = pts[order, -1]
    ez = np.exp(z)
    prev = np.concatenate([[0.0], ez[:-1]])
    total = 0.0
    for j in range(m):
        if ez[j] - prev[j] == 0.0:
            continue
        sub = _pareto_front(pts[order[j:], :-1])
        total += (ez[j] - prev[j]) * _union_integral_sorted(sub)
    return float(total)


def orthant_union_integral(points):
    """Integral of e^{1'x} over the union of orthants {x < p}, p in points.

    Exact for any finite point set: dominated points are pruned, then the
    union is swept coordinate-wise.  For dimension 1 this is exp(max p);
    for dimension 2 the staircase sum; beyond dimension 2 the frontier is
    capped at 25 points (TooManyExtremePoints otherwise).
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0.0
    if pts.ndim != 2:
        raise GridError("points must be a 2-d array (m, d)")
    front = _pareto_front(pts)
    if pts.shape[1] >= 3 and front.shape[0] > 25:
        raise TooManyExtremePoints(
            "%d extreme points in dimension %d" % (front.shape[0], pts.shape[1])
        )
    return _union_integral_sorted(front)


def _g_closed_1d(beta, xi_diag):
    return gamma_fn(1.0 / beta + 1.0) * (2.0 / xi_diag) ** (1.0 / beta)


def g_integral(beta, Xi, tol=1e-6):
    """Corner envelope factor G(beta, Xi).

    In the variables y_i = t_i^{beta_i/2} (one-sided),

        G = int_{R_+^n} exp(-y'Xi y / 2) prod_i (2/beta_i) y_i^{2/beta_i - 1} dy.

    Diagonal Xi factorizes into closed-form one-dimensional integrals
    Gamma(1/beta + 1) (2/Xi_ii)^{1/beta}; otherwise an adaptive quadrature
    is used (supported up to three coordinates).  Xi must be positive
    definite on the cone, else Divergent.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    n = beta.shape[0]
    if n == 0:
        return 1.0
    Xi = np.atleast_2d(np.asarray(Xi, dtype=float))
    if Xi.shape != (n, n):
        raise GridError("Xi must be (n, n) matching beta")
    if np.any(beta <= 0) or np.any(beta > 2):
        raise DomainError("beta entries must lie in (0, 2]")
    if n > 3:
        raise DimensionUnsupported("g_integral supports at most 3 coordinates")
    Xi = 0.5 * (Xi + Xi.T)
    eigmin = float(np.linalg.eigvalsh(Xi).min())
    if eigmin <= 0:
        raise Divergent("Xi is not positive definite; the envelope diverges")

    off = Xi - np.diag(np.diag(Xi))
    if np.max(np.abs(off)) <= 1e-14 * max(1.0, np.max(np.abs(Xi))):
        return float(np.prod([_g_closed_1d(beta[i], Xi[i, i]) for i in range(n)]))

    span = np.sqrt(2.0 * max(40.0, -2.0 * np.log(tol)) / eigmin)

    def dens(y):
        q = 0.5 * y @ Xi @ y
        jac = np.prod((2.0 / beta) * y ** (2.0 / beta - 1.0))
        return np.exp(-q) * jac

    if n == 2:
        val, _ = integrate.dblquad(
            lambda y2, y1: dens(np.array([y1, y2])),
            0.0,
            span,
            0.0,
            span,
            epsabs=tol * 1e-2,
            epsrel=1e-8,
        )
        return float(val)
    val, _ = integrate.tplquad(
        lambda y3, y2, y1: dens(np.array([y1, y2, y3])),
        0.0,
        span,
        0.0,
        span,
        0.0,
        span,
        epsabs=tol * 1e-1,
        epsrel=1e-6,
    )
    return float(val)


def g_corollary_report(beta, xi):
    """Both readings of the diagonal envelope for the reduction corollary.

    The direct route evaluates G with Xi = diag(2 xi) and gives
    Gamma(1/beta+1) xi^{-1/beta} per coordinate; the corollary display reads
    (2 xi)^{-1/beta} Gamma(1/beta+1).  The two differ by 2^{-sum 1/beta};
    both are reported so the discrepancy is visible rather than silently
    resolved.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(xi <= 0):
        raise Divergent("xi entries must be positive for the diagonal envelope")
    direct = float(
        np.prod([_g_closed_1d(beta[i], 2.0 * xi[i]) for i in range(beta.shape[0])])
    )
    corollary = float(
        np.prod(gamma_fn(1.0 / beta + 1.0) * (2.0 * xi) ** (-1.0 / beta))
    )
    return {
        "direct": direct,
        "corollary_display": corollary,
        "ratio": corollary / direct,
    }


def pickands_constant(
    two_h,
    S=32.0,
    step=0.01,
    n_paths=200000,
    seed=None,
    method="dieker-yakir",
    report_convergence=False,
    threads=1,
):
    """Estimate the classical one-parameter constant for exponent two_h.

    Uses the ratio representation  E[ max_t e^{Z(t)} / int e^{Z(t)} dt ]
    with Z(t) = sqrt(2) B_{two_h/2}(t) - |t|^{two_h} on the centered window
    [-S/2, S/2].  The per-path weight lies in (0, 1/step], so the estimator
    has bounded variance, unlike naive window-normalized suprema.  Known
    values: two_h = 1 gives 1, two_h = 2 gives 1/sqrt(pi).
    """
    if not (0.0 < two_h <= 2.0):
        raise DomainError("two_h must lie in (0, 2]")
    if method != "dieker-yakir":
        raise DomainError("unknown method %r" % (method,))
    if S <= 0 or step <= 0 or step >= S:
        raise GridError("need 0 < step < S")
    seed = resolve_seed(seed)

    def estimate(S_loc, step_loc):
        half = max(1, int(round(S_loc / (2.0 * step_loc))))
        n_incr = 2 * half
        engine = FbmGridEngine(two_h / 2.0, n_incr, step_loc)
        t = (np.arange(n_incr + 1) - half) * step_loc
        t_pow = np.abs(t) ** two_h

        def worker(chunk, n_rows):
            rng = rng_stream(seed, _ROLE_PATHS, chunk)
            b = engine.paths(rng, n_rows)
            z = np.sqrt(2.0) * (b - b[:, [half]]) - t_pow
            zmax = z.max(axis=1, keepdims=True)
            denom = step_loc * np.exp(z - zmax).sum(axis=1)
            return 1.0 / denom

        ratios = np.concatenate(_run_chunks(worker, n_paths, threads))
        return float(ratios.mean()), float(
            ratios.std(ddof=1) / np.sqrt(len(ratios))
        ), engine.scheme

    value, std_err, scheme = estimate(S, step)
    convergence = None
    if report_convergence:
        v_s, _, _ = estimate(S / 2.0, step)
        v_h, _, _ = estimate(S, step * 2.0)
        convergence = {"dS": abs(value - v_s), "dStep": abs(value - v_h)}
    return EstimateRecord(
        value=value,
        std_err=std_err,
        config={
            "S": S,
            "Lambda": None,
            "grid_step": step,
            "n_paths": n_paths,
            "seed": seed,
            "scheme": scheme,
            "two_h": two_h,
        },
        method="dieker-yakir",
        convergence=convergence,
    )


def piterbarg_constant(
    lam=None,
    c=None,
    variant="half_drift",
    window=None,
    step=0.5,
    n_paths=200000,
    seed=None,
    report_convergence=False,
    threads=1,
):
    """Estimate E exp(sup_t B(t) - c t) from exact drifted-BM suprema.

    variant "half_drift" takes lam > 0 and drift c = (1 + lam)/2, for which
    the closed form is (1 + lam)/lam; variant "plain" takes the drift c
    directly and the closed form is 2c/(2c - 1), requiring c > 1/2.  The
    supremum on [0, window] is sampled exactly: Gaussian skeleton plus the
    conditional bridge maximum on each interval.  Antithetic increments are
    used.  For lam <= 1 the weight e^sup is heavy-tailed and the reported
    sample std_err can understate the true error.
    """
    if variant == "half_drift":
        if lam is None or lam <= 0:
            raise DriftTooSmall("half_drift variant needs lam > 0")
        c = (1.0 + lam) / 2.0
        closed = (1.0 + lam) / lam
    elif variant == "plain":
        if c is None or c <= 0.5:
            raise DriftTooSmall("plain variant needs drift c > 1/2")
        lam_eff = 2.0 * c - 1.0
        lam = lam if lam is not None else lam_eff
        closed = 2.0 * c / (2.0 * c - 1.0)
    else:
        raise DomainError("unknown variant %r" % (variant,))
    lam_eff = 2.0 * c - 1.0
    if window is None:
        window = float(min(512.0, max(64.0, 24.0 / (lam_eff * c))))
    seed = resolve_seed(seed)
    n_int = max(1, int(round(window / step)))
    h = window / n_int

    def worker(chunk, n_rows):
        rng = rng_stream(seed, _ROLE_BRIDGE, chunk)
        half = CHUNK // 2
        z = rng.standard_normal((half, n_int))
        u = rng.uniform(size=(CHUNK, n_int))
        inc = np.empty((CHUNK, n_int))
        inc[0::2] = z
        inc[1::2] = -z
        inc = inc * np.sqrt(h) - c * h
        y = np.concatenate(
            [np.zeros((CHUNK, 1)), np.cumsum(inc, axis=1)], axis=1
        )
        a, bnd = y[:, :-1], y[:, 1:]
        disc = (bnd - a) ** 2 - 2.0 * h * np.log(u)
        peaks = 0.5 * (a + bnd + np.sqrt(disc))
        return np.exp(peaks.max(axis=1))[:n_rows]

    vals = np.concatenate(_run_chunks(worker, n_paths, threads))
    value = float(vals.mean())
    std_err = float(vals.std(ddof=1) / np.sqrt(len(vals)))
    convergence = None
    if report_convergence:
        convergence = {"dS": abs(value - closed), "dStep": 0.0}
    return EstimateRecord(
        value=value,
        std_err=std_err,
        config={
            "S": window,
            "Lambda": None,
            "grid_step": step,
            "n_paths": n_paths,
            "seed": seed,
            "variant": variant,
            "lam": lam,
            "drift": c,
            "closed_form": closed,
        },
        method="bridge-exact",
        convergence=convergence,
    )


def generalized_constant(
    dd,
    S=16.0,
    Lambda=8.0,
    step=0.02,
    n_paths=100000,
    seed=None,
    report_convergence=False,
    threads=1,
):
    """Estimate the generalized constant of a derived local field.

    Samples the limit field coordinate-wise on [0, S] (step `step`) for
    coordinates in I u J and at the single node 0 for coordinates in K,
    computes for each path the orthant-union integral of the Pareto
    frontier of field values, averages, and normalizes by S per coordinate
    in I (whose contribution grows linearly in the window).  Lambda prunes
    grid points whose coordinate sum sits more than Lambda below the
    per-curve maximum; their contribution to the integral is below
    e^{-Lambda} each.

    A field with no noisy coordinates degenerates to the single point 0 and
    the estimate is exactly 1.
    """
    if S <= 0 or step <= 0:
        raise GridError("need positive S and step")
    seed = resolve_seed(seed)
    sets = dd.sets
    noisy = sorted(set(sets["I"]) | set(sets["J"]))
    n_I = len(sets["I"])
    d = dd.expansion.d

    def estimate(S_loc, step_loc):
        axes = []
        for i in range(dd.expansion.n):
            if i in noisy:
                axes.append(np.arange(0.0, S_loc + step_loc / 2.0, step_loc))
            else:
                axes.append(np.array([0.0]))
        sampler = LimitFieldSampler(dd, axes)
        if not noisy:
            return 1.0, 0.0

        def worker(chunk, n_rows):
            rng = rng_stream(seed, _ROLE_LIMIT, chunk)
            curves = sampler.sample_curves(rng, n_rows)
            out = np.empty(n_rows)
            for r in range(n_rows):
                front = None
                for curve in curves:
                    pts = curve[r]
                    ssum = pts.sum(axis=1)
                    pts = pts[ssum >= ssum.max() - Lambda]
                    f = _pareto_front(pts)
                    if front is None:
                        front = f
                    else:
                        mink = (front[:, None, :] + f[None, :, :]).reshape(-1, d)
                        ssum = mink.sum(axis=1)
                        mink = mink[ssum >= ssum.max() - Lambda]
                        front = _pareto_front(mink)
                out[r] = orthant_union_integral(front)
            return out

        vals = np.concatenate(_run_chunks(worker, n_paths, threads))
        norm = S_loc ** n_I
        return float(vals.mean() / norm), float(
            vals.std(ddof=1) / np.sqrt(len(vals)) / norm
        )

    value, std_err = estimate(S, step)
    convergence = None
    if report_convergence:
        v_s, _ = estimate(S / 2.0, step)
        v_h, _ = estimate(S, step * 2.0)
        convergence = {"dS": abs(value - v_s), "dStep": abs(value - v_h)}
    return EstimateRecord(
        value=value,
        std_err=std_err,
        config={
            "S": S,
            "Lambda": Lambda,
            "grid_step": step,
            "n_paths": n_paths,
            "seed": seed,
        },
        method="frontier-mc",
        convergence=convergence,
    )
