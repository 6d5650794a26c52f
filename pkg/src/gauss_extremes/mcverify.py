"""Monte Carlo verification of the double-crossing asymptotics.

Paths are sampled on a uniform grid with the deterministic chunked streams
from the simulate module, so runs with the same seed and grid share path
noise exactly: estimates at different levels u are pathwise monotone, and
the diagonal-strip event is pathwise contained in the full event.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import minimum_filter1d

from .errors import DomainError, GridError, GridMismatch
from .linalg import cholesky_psd
from .simulate import (
    _ROLE_PATHS,
    CHUNK,
    FbmGridEngine,
    _run_chunks,
    resolve_seed,
    rng_stream,
)

_Z95 = 1.959963984540054


def wilson_interval(hits, n):
    """95% Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise DomainError("need at least one trial")
    p = hits / n
    z2 = _Z95 ** 2
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = _Z95 * np.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class McProbability:
    p_hat: float
    ci_low: float
    ci_high: float
    n_paths: int
    grid: int
    u: float
    seed: int

    def to_dict(self):
        return {
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_paths": self.n_paths,
            "grid": self.grid,
            "u": self.u,
            "seed": self.seed,
        }


def _path_worker(model, n_steps):
    """Return a chunk worker sampling scalar paths of the model on the grid."""
    grid = np.linspace(0.0, model.T, n_steps + 1)
    if model.kind == "fbm":
        engine = FbmGridEngine(model.params["H"], n_steps, model.T / n_steps)

        def sample(rng, n_rows):
            return engine.paths(rng, n_rows)

    else:
        L, _ = cholesky_psd(model.scalar_cov_matrix(grid))

        def sample(rng, n_rows):
            z = rng.standard_normal((CHUNK, L.shape[0]))[:n_rows]
            return z @ L.T

    return sample


def mc_double_crossing(model, u, n_steps=1024, n_paths=100000, seed=None, threads=1):
    """Estimate P{exists t, s in [0,T]: X(t) > a u, X(s) < -b u} on a grid.

    The grid estimate is biased low (the continuous-time event is a
    superset); refining n_steps shrinks the bias monotonically pathwise.
    """
    if n_steps < 1:
        raise GridError("n_steps must be at least 1")
    seed = resolve_seed(seed)
    sample = _path_worker(model, n_steps)
    au, bu = model.a * u, model.b * u

    def worker(chunk, n_rows):
        rng = rng_stream(seed, _ROLE_PATHS, chunk)
        x = sample(rng, n_rows)
        return np.count_nonzero((x.max(axis=1) > au) & (x.min(axis=1) < -bu))

    hits = int(sum(_run_chunks(worker, n_paths, threads)))
    lo, hi = wilson_interval(hits, n_paths)
    return McProbability(
        p_hat=hits / n_paths,
        ci_low=lo,
        ci_high=hi,
        n_paths=n_paths,
        grid=n_steps,
        u=float(u),
        seed=seed,
    )


def diagonal_strip_probability(
    model, u, eps, n_steps=1024, n_paths=100000, seed=None, threads=1
):
    """Estimate the double crossing restricted to pairs with |t - s| < eps.

    Uses the same path streams as mc_double_crossing for the same seed and
    grid, so the strip estimate is pathwise dominated by the full one.  The
    strict inequality is honored on the grid: node pairs up to
    ceil(eps/h) - 1 steps apart are eligible.  eps >= T reduces to the full
    event.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if n_steps < 1:
        raise GridError("n_steps must be at least 1")
    seed = resolve_seed(seed)
    sample = _path_worker(model, n_steps)
    h = model.T / n_steps
    k = int(np.ceil(eps / h))
    size = 2 * k - 1
    au, bu = model.a * u, model.b * u

    def worker(chunk, n_rows):
        rng = rng_stream(seed, _ROLE_PATHS, chunk)
        x = sample(rng, n_rows)
        if size >= 2 * x.shape[1] - 1:
            wmin = x.min(axis=1, keepdims=True)
        else:
            wmin = minimum_filter1d(x, size=size, axis=1, mode="nearest")
        return np.count_nonzero(((x > au) & (wmin < -bu)).any(axis=1))

    hits = int(sum(_run_chunks(worker, n_paths, threads)))
    lo, hi = wilson_interval(hits, n_paths)
    return McProbability(
        p_hat=hits / n_paths,
        ci_low=lo,
        ci_high=hi,
        n_paths=n_paths,
        grid=n_steps,
        u=float(u),
        seed=seed,
    )


def compare_report(asym_results, mc_results):
    """Tabulate asymptotic vs Monte Carlo estimates over a common u grid.

    Verdict rule: with ratios r = p_hat / approx at the two largest u
    values, PASS when |r1 - r2| is below the pooled relative CI width
    sqrt(rw1^2 + rw2^2) (rw = half CI width over p_hat) plus 0.25.  Zero
    hits at either of the top levels make the comparison INCONCLUSIVE
    (rows still carry the CI upper bound on the ratio).
    """
    if len(asym_results) != len(mc_results) or not asym_results:
        raise GridMismatch("need equally long, nonempty result lists")
    rows = []
    for a, m in zip(asym_results, mc_results):
        ua = a.components.get("u")
        if ua is not None and abs(ua - m.u) > 1e-12 * max(1.0, abs(m.u)):
            raise GridMismatch(
                "asymptotic u=%r vs monte carlo u=%r" % (ua, m.u)
            )
        rows.append((a, m))
    us_m = [m.u for _, m in rows]
    order = np.argsort(us_m)
    table = []
    for idx in order:
        a, m = rows[idx]
        approx = a.approx_prob
        ratio = m.p_hat / approx if approx > 0 else float("inf")
        table.append(
            {
                "u": m.u,
                "p_hat": m.p_hat,
                "ci_low": m.ci_low,
                "ci_high": m.ci_high,
                "approx": approx,
                "ratio": ratio,
                "ratio_ci_upper": m.ci_high / approx if approx > 0 else float("inf"),
            }
        )
    top = table[-2:]
    if len(top) < 2:
        verdict, diff, threshold = "INCONCLUSIVE", None, None
    elif any(row["p_hat"] <= 0 for row in top):
        verdict, diff, threshold = "INCONCLUSIVE", None, None
    else:
        rws = [
            (row["ci_high"] - row["ci_low"]) / (2.0 * row["p_hat"]) for row in top
        ]
        pooled = float(np.hypot(rws[0], rws[1]))
        diff = abs(top[0]["ratio"] - top[1]["ratio"])
        threshold = pooled + 0.25
        verdict = "PASS" if diff <= threshold else "FAIL"
    return {
        "rows": table,
        "verdict": verdict,
        "ratio_diff": diff,
        "threshold": threshold,
        "u_top": [row["u"] for row in top],
    }


def report_to_csv(report, path):
    cols = ["u", "p_hat", "ci_low", "ci_high", "approx", "ratio"]
    lines = [",".join(cols)]
    for row in report["rows"]:
        lines.append(",".join("%.12g" % row[c] for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
