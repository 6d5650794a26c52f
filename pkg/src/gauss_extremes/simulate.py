"""Gaussian path sampling: grid processes, fBm, and the local limit field.

Determinism contract: every sampler draws from Philox streams keyed by
(seed, role, chunk) through SeedSequence spawn keys, generates paths in
fixed-size chunks of 1024, and assembles chunks in index order.  The output
for a given seed is therefore byte-identical regardless of how many paths
are requested (prefixes agree) and of the number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import DomainError, GridError, NumericalFailure
from .linalg import cholesky_psd

CHUNK = 1024

# role indices for the (seed, role, chunk) stream keying; mc-verify reuses
# _ROLE_PATHS so that asymptotic comparisons across u share path noise
_ROLE_PATHS = 0
_ROLE_LIMIT = 1
_ROLE_BRIDGE = 2


def rng_stream(seed, role, chunk):
    """Philox generator for one (role, chunk) cell of the seed's lattice."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(role), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def resolve_seed(seed):
    if seed is None:
        return int(np.random.SeedSequence().entropy % (2 ** 63))
    return int(seed)


def _chunk_indices(n_paths):
    n_chunks = (n_paths + CHUNK - 1) // CHUNK
    return [(c, min(CHUNK, n_paths - c * CHUNK)) for c in range(n_chunks)]


def _run_chunks(worker, n_paths, threads):
    jobs = _chunk_indices(n_paths)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda jc: worker(*jc), jobs))
    else:
        parts = [worker(*jc) for jc in jobs]
    return parts


@dataclass
class PathBatch:
    """A batch of sampled paths on a common grid.

    values has shape (n_paths, n_nodes) when dim == 1 and
    (n_paths, n_nodes, dim) otherwise.
    """

    n_paths: int
    dim: int
    values: np.ndarray
    seed: int
    scheme: str
    grid: np.ndarray = field(default=None)

    def to_csv(self, path):
        """One row per path; columns are grid nodes (times components)."""
        flat = self.values.reshape(self.n_paths, -1)
        if self.dim == 1:
            cols = ["t%g" % t for t in self.grid]
        else:
            cols = [
                "t%g_c%d" % (t, k) for t in self.grid for k in range(self.dim)
            ]
        header = ",".join(cols)
        np.savetxt(path, flat, delimiter=",", header=header, comments="")


class FbmGridEngine:
    """Circulant-embedding sampler for fBm increments on a uniform grid.

    Embeds the fGn covariance gamma(k) in a circulant of size 2m starting
    from the minimal m = n_incr - 1 and doubling m up to 8x when the
    embedding has negative eigenvalues; falls back to a Cholesky factor of
    the Toeplitz covariance if doubling never succeeds.  The scheme string
    records which route was taken.
    """

    def __init__(self, H, n_incr, h, method="circulant"):
        if not (0.0 < H < 1.0):
            raise DomainError("H must lie in (0, 1)")
        if n_incr < 1:
            raise GridError("need at least one increment")
        self.H = H
        self.n_incr = n_incr
        self.h = h
        self.sqrt_eigs = None
        self.chol = None
        if method not in ("circulant", "cholesky"):
            raise DomainError("unknown fbm sampling method %r" % (method,))
        if method == "circulant" and n_incr >= 2:
            for mult in (1, 2, 4, 8):
                m = (n_incr - 1) * mult
                gam = self._gamma(np.arange(m + 1))
                c = np.concatenate([gam, gam[m - 1:0:-1]])
                eigs = np.fft.fft(c).real
                if eigs.min() >= -1e-10 * max(eigs.max(), 1e-300):
                    self.sqrt_eigs = np.sqrt(np.clip(eigs, 0.0, None))
                    self.M = c.shape[0]
                    self.scheme = (
                        "circulant" if mult == 1 else "circulant(m_mult=%d)" % mult
                    )
                    return
            method = "cholesky"
            fallback = True
        else:
            fallback = False
        gam = self._gamma(np.arange(n_incr))
        self.chol, jitter = cholesky_psd(toeplitz(gam))
        base = "cholesky-fallback" if fallback else "cholesky"
        self.scheme = base if jitter == 0.0 else "%s(jitter=%g)" % (base, jitter)

    def _gamma(self, k):
        k = np.asarray(k, dtype=float)
        twoH = 2.0 * self.H
        raw = 0.5 * (
            np.abs(k + 1) ** twoH + np.abs(k - 1) ** twoH - 2.0 * np.abs(k) ** twoH
        )
        return self.h ** twoH * raw

    def increments(self, rng, n_rows):
        """Sample fGn rows of shape (n_rows, n_incr)."""
        if self.chol is not None:
            z = rng.standard_normal((n_rows, self.n_incr))
            return z @ self.chol.T
        n_complex = (n_rows + 1) // 2
        z = rng.standard_normal((n_complex, self.M)) + 1j * rng.standard_normal(
            (n_complex, self.M)
        )
        f = np.fft.fft(z * self.sqrt_eigs, axis=1) / np.sqrt(self.M)
        out = np.empty((2 * n_complex, self.n_incr))
        out[0::2] = f.real[:, : self.n_incr]
        out[1::2] = f.imag[:, : self.n_incr]
        return out[:n_rows]

    def paths(self, rng, n_rows):
        """Sample fBm rows (n_rows, n_incr + 1) starting at 0."""
        inc = self.increments(rng, n_rows)
        out = np.zeros((n_rows, self.n_incr + 1))
        np.cumsum(inc, axis=1, out=out[:, 1:])
        return out


def sample_fbm(H, T, n_steps, n_paths, seed=None, method="circulant", threads=1):
    """Sample fBm paths on the uniform grid 0, T/n_steps, ..., T."""
    if T <= 0:
        raise DomainError("T must be positive")
    if n_steps < 1 or n_paths < 1:
        raise GridError("n_steps and n_paths must be at least 1")
    seed = resolve_seed(seed)
    h = T / n_steps
    engine = FbmGridEngine(H, n_steps, h, method=method)

    def worker(chunk, n_rows):
        rng = rng_stream(seed, _ROLE_PATHS, chunk)
        return engine.paths(rng, n_rows)

    values = np.concatenate(_run_chunks(worker, n_paths, threads), axis=0)
    grid = np.linspace(0.0, T, n_steps + 1)
    return PathBatch(
        n_paths=n_paths,
        dim=1,
        values=values,
        seed=seed,
        scheme=engine.scheme,
        grid=grid,
    )


def sample_gaussian_grid(cov, grid, n_paths, seed=None, threads=1):
    """Sample a centered Gaussian process on an arbitrary 1-d grid.

    cov is a callable (t, s) -> covariance; a scalar return gives dim 1,
    a d x d array gives a vector process (values then have a trailing
    component axis).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.shape[0] < 1:
        raise GridError("grid must be a nonempty 1-d array")
    seed = resolve_seed(seed)
    m = grid.shape[0]
    probe = np.asarray(cov(grid[0], grid[0]), dtype=float)
    dim = 1 if probe.ndim == 0 else probe.shape[0]
    if dim == 1:
        try:
            big = np.asarray(cov(grid[:, None], grid[None, :]), dtype=float)
            if big.shape != (m, m):
                raise ValueError
        except Exception:
            big = np.array([[float(cov(t, s)) for s in grid] for t in grid])
    else:
        big = np.empty((m, dim, m, dim))
        for i, t in enumerate(grid):
            for j, s in enumerate(grid):
                big[i, :, j, :] = np.asarray(cov(t, s), dtype=float)
        big = big.reshape(m * dim, m * dim)
    L, jitter = cholesky_psd(big)
    scheme = "cholesky" if jitter == 0.0 else "cholesky(jitter=%g)" % jitter

    def worker(chunk, n_rows):
        rng = rng_stream(seed, _ROLE_PATHS, chunk)
        z = rng.standard_normal((CHUNK, L.shape[0]))[:n_rows]
        return z @ L.T

    values = np.concatenate(_run_chunks(worker, n_paths, threads), axis=0)
    if dim > 1:
        values = values.reshape(n_paths, m, dim)
    return PathBatch(
        n_paths=n_paths,
        dim=dim,
        values=values,
        seed=seed,
        scheme=scheme,
        grid=grid,
    )


class LimitFieldSampler:
    """Sampler for the local limit field of a derived model.

    The field over the product grid decomposes coordinate-wise,

        E(t) = sum_i  C_i(t_i),

    where for i in I u J the curve C_i(t) = Y_i(t) - t^{nu_i} V_i 1
    (minus the drift xi_i t^{nu_i} 1 when i is in J), for i in K the curve
    is the pure drift -xi_i t^{nu_i} 1, and coordinates in D = (J u K) n F
    additionally carry the quadratic-scale Gaussian term t^{beta_i/2} g_i
    with Cov(g_i, g_j) = diag(w) D_ij diag(w).  Samplers expose the curves
    per coordinate so downstream code can exploit the decomposition.
    """

    def __init__(self, dd, axes):
        e = dd.expansion
        self.dd = dd
        self.d = e.d
        self.axes = [np.asarray(ax, dtype=float) for ax in axes]
        if len(self.axes) != e.n:
            raise GridError("need one axis per time coordinate")
        w = dd.w
        sets = dd.sets
        self.noisy = sorted(set(sets["I"]) | set(sets["J"]))
        self.drift_only = sorted(set(sets["K"]))
        self.D_coords = sorted((set(sets["J"]) | set(sets["K"])) & set(sets["F"]))
        self.engines = {}
        self.factors = {}
        self.drifts = {}
        for i in range(e.n):
            ax = self.axes[i]
            nu = dd.nu[i]
            drift = np.zeros((ax.shape[0], self.d))
            if i in self.noisy:
                V = np.diag(w) @ e.A5[i] @ np.diag(w)
                vals, vecs = np.linalg.eigh(V)
                vals = np.clip(vals, 0.0, None)
                self.factors[i] = vecs * np.sqrt(vals)
                drift -= np.abs(ax[:, None]) ** nu * (V @ np.ones(self.d))
                if ax.shape[0] > 1:
                    steps = np.diff(ax)
                    if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
                        raise GridError("axis %d must be uniform" % i)
                    self.engines[i] = FbmGridEngine(
                        nu / 2.0, ax.shape[0] - 1, float(steps[0])
                    )
            if i in sets["J"] or i in sets["K"]:
                drift -= dd.xi[i] * np.abs(ax[:, None]) ** nu
            self.drifts[i] = drift
        if self.D_coords:
            blocks = np.empty((len(self.D_coords), len(self.D_coords), self.d, self.d))
            for ii, i in enumerate(self.D_coords):
                for jj, j in enumerate(self.D_coords):
                    blocks[ii, jj] = np.diag(w) @ dd.D[i, j] @ np.diag(w)
            from .linalg import factor_block_psd

            self.z_factor = factor_block_psd(blocks)

    def sample_curves(self, rng, n_rows):
        """Per-coordinate curves, as a list of (n_rows, m_i, d) arrays."""
        curves = []
        for i in range(len(self.axes)):
            ax = self.axes[i]
            base = np.broadcast_to(
                self.drifts[i], (n_rows, ax.shape[0], self.d)
            ).copy()
            if i in self.engines:
                eng = self.engines[i]
                b = eng.paths(rng, n_rows * self.d).reshape(
                    n_rows, self.d, ax.shape[0]
                )
                y = np.sqrt(2.0) * np.einsum("kl,nlm->nmk", self.factors[i], b)
                base += y
            elif i in self.noisy and ax.shape[0] == 1 and ax[0] != 0.0:
                raise GridError("single-node axis for a noisy coordinate must be t=0")
            curves.append(base)
        if self.D_coords:
            nD, d = len(self.D_coords), self.d
            z = rng.standard_normal((n_rows, nD * d))
            flat = self.z_factor.transpose(0, 2, 1, 3).reshape(nD * d, nD * d)
            g = (z @ flat.T).reshape(n_rows, nD, d)
            for ii, i in enumerate(self.D_coords):
                ax = self.axes[i]
                half = np.abs(ax) ** (self.dd.expansion.beta[i] / 2.0)
                curves[i] = curves[i] + half[None, :, None] * g[:, None, ii, :]
        return curves


def sample_limit_field(dd, S, step, n_paths, seed=None, windows=None, threads=1):
    """Sample the limit field on the literal product grid.

    Coordinates in I u J get the axis 0, step, ..., S; coordinates in K get
    the single node 0 unless an explicit axis is supplied through windows
    (a dict coordinate -> node array).  values has shape
    (n_paths, prod(m_i), d) with the product grid flattened in row-major
    (last coordinate fastest) order; the axes are attached to the batch.
    """
    e = dd.expansion
    axes = []
    for i in range(e.n):
        if windows is not None and i in windows:
            axes.append(np.asarray(windows[i], dtype=float))
        elif i in dd.sets["K"]:
            axes.append(np.array([0.0]))
        else:
            axes.append(np.arange(0.0, S + step / 2.0, step))
    total_nodes = int(np.prod([ax.shape[0] for ax in axes]))
    if total_nodes * n_paths * e.d > 2e8:
        raise GridError(
            "product grid too large (%d nodes x %d paths)" % (total_nodes, n_paths)
        )
    seed = resolve_seed(seed)
    sampler = LimitFieldSampler(dd, axes)

    # row-major flattening of the product grid via index arrays
    shape = [ax.shape[0] for ax in axes]
    index_grids = np.meshgrid(*[np.arange(m) for m in shape], indexing="ij")
    flat_idx = [g.reshape(-1) for g in index_grids]

    def worker(chunk, n_rows):
        rng = rng_stream(seed, _ROLE_LIMIT, chunk)
        curves = sampler.sample_curves(rng, n_rows)
        out = np.zeros((n_rows, total_nodes, e.d))
        for i, curve in enumerate(curves):
            out += curve[:, flat_idx[i], :]
        return out

    values = np.concatenate(_run_chunks(worker, n_paths, threads), axis=0)
    batch = PathBatch(
        n_paths=n_paths,
        dim=e.d,
        values=values,
        seed=seed,
        scheme="limit-field",
        grid=None,
    )
    batch.axes = axes
    return batch
