"""
Simulation of stationary Gaussian fields on regular grids.

* :func:`simulate_stationary_1d` - circulant embedding of the Toeplitz
  covariance, with a dense Cholesky fallback when the embedding is not
  non-negative definite.
* :func:`simulate_berry_2d` - random plane waves with unit wavenumber, whose
  covariance tends to ``J_0(|x - y|)`` as the number of waves grows.

Every path ``p`` draws from its own stream ``default_rng([seed, p])`` so the
realisation does not depend on how paths are scheduled.
"""

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, toeplitz

from .errors import GeometryError, SimulationError
from .kernels import fgn_correlation
from .special import bessel_j0, bessel_j1

__all__ = [
    "bessel_j0", "bessel_j1", "fgn_correlation", "FieldSample", "Grid",
    "simulate_stationary_1d", "simulate_berry_2d", "berry_path",
    "region_weights", "integrate_functional", "empirical_covariance",
]

BERRY_MAX_SPACING = math.pi / 4
EMBED_NEG_TOL = 1e-10
CHOL_JITTER = 1e-12
_MAGIC = b"SETCOVFS"


@dataclass(frozen=True)
class Grid:
    """Regular grid: node ``i`` along axis ``k`` sits at ``origin[k] + i * spacing``."""

    origin: tuple
    spacing: float
    counts: tuple

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError("grid spacing must be positive")
        if len(self.origin) != len(self.counts) or any(c < 1 for c in self.counts):
            raise ValueError("grid origin/counts mismatch")

    @property
    def dim(self):
        return len(self.counts)

    def axes(self):
        return [self.origin[k] + self.spacing * np.arange(n)
                for k, n in enumerate(self.counts)]

    def points(self):
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @classmethod
    def covering(cls, lows, highs, spacing):
        """Smallest grid whose cells cover the box ``[lows, highs]``."""
        lows = np.atleast_1d(np.asarray(lows, float))
        highs = np.atleast_1d(np.asarray(highs, float))
        counts = tuple(int(math.ceil((h - l) / spacing)) + 1 for l, h in zip(lows, highs))
        return cls(tuple(float(x) for x in lows), float(spacing), counts)


@dataclass(eq=False)
class FieldSample:
    """Field values of shape ``(n_paths,) + grid.counts``."""

    grid: Grid
    values: np.ndarray
    seed: int
    generator: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise SimulationError("field sample contains non-finite values")

    @property
    def dim(self):
        return self.grid.dim

    @property
    def n_paths(self):
        return self.values.shape[0]

    def save(self, path):
        """Write ``magic | uint64 header length | header JSON | float64 data`` (little-endian)."""
        header = {
            "dim": self.dim, "origin": list(self.grid.origin),
            "spacing": self.grid.spacing, "counts": list(self.grid.counts),
            "n_paths": self.n_paths, "seed": self.seed, "generator": self.generator,
            "dtype": "<f8", "order": "C", "meta": self.meta,
        }
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            if fh.read(len(_MAGIC)) != _MAGIC:
                raise ValueError(f"{path} is not a field sample file")
            (n,) = struct.unpack("<Q", fh.read(8))
            header = json.loads(fh.read(n).decode("utf-8"))
            data = np.frombuffer(fh.read(), dtype="<f8")
        shape = (header["n_paths"],) + tuple(header["counts"])
        grid = Grid(tuple(header["origin"]), header["spacing"], tuple(header["counts"]))
        return cls(grid, data.reshape(shape).astype(float), header["seed"],
                   header["generator"], header.get("meta", {}))


# ----------------------------------------------------------------------------
# one-dimensional fields
# ----------------------------------------------------------------------------
def _corr_callable(C):
    if hasattr(C, "radial"):
        return C.radial, C.name
    return C, getattr(C, "__name__", "kernel")


def simulate_stationary_1d(C, n, spacing, n_paths, seed, origin=0.0):
    """Exact-in-law samples of a stationary 1-D Gaussian process.

    Parameters
    ----------
    C : callable or CovarianceModel
        Correlation as a function of the lag ``|x - y|`` (vectorised).
    n : int
        Number of grid nodes.

    Raises
    ------
    SimulationError
        if the embedding has negative eigenvalues and the Cholesky fallback
        also fails.
    """
    f, name = _corr_callable(C)
    if n < 2:
        raise ValueError("need at least 2 grid nodes")
    lags = spacing * np.arange(n)
    c = np.asarray(f(lags), dtype=float)
    row = np.concatenate([c, c[-2:0:-1]])
    m = row.size
    lam = np.fft.fft(row).real
    grid = Grid((float(origin),), float(spacing), (n,))
    out = np.empty((n_paths, n))
    if lam.min() >= -EMBED_NEG_TOL * max(abs(c[0]), 1.0):
        root = np.sqrt(np.maximum(lam, 0.0) / m)
        for p in range(n_paths):
            rng = np.random.default_rng([seed, p])
            z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            out[p] = np.fft.fft(root * z).real[:n]
        method = "circulant"
    else:
        try:
            L = cholesky(toeplitz(c) + CHOL_JITTER * np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            raise SimulationError(
                f"covariance {name!r} is not positive definite on the grid "
                f"(n={n}, spacing={spacing}) even with jitter {CHOL_JITTER}") from None
        for p in range(n_paths):
            rng = np.random.default_rng([seed, p])
            out[p] = L @ rng.standard_normal(n)
        method = "cholesky"
    return FieldSample(grid, out, seed, f"stationary_1d:{method}", {"kernel": name})


# ----------------------------------------------------------------------------
# Berry random waves
# ----------------------------------------------------------------------------
def berry_path(grid, n_waves, seed, path):
    """One realisation ``sqrt(2/N) sum_j cos(<k_j, x> + phi_j)`` on a 2-D grid."""
    if grid.dim != 2:
        raise ValueError("Berry fields are two-dimensional")
    rng = np.random.default_rng([seed, path])
    ang = rng.uniform(0.0, 2 * math.pi, n_waves)
    phase = rng.uniform(0.0, 2 * math.pi, n_waves)
    x1, x2 = grid.axes()
    e1 = np.exp(1j * np.outer(x1, np.cos(ang)))
    e2 = np.exp(1j * np.outer(x2, np.sin(ang)))
    vals = (e1 * np.exp(1j * phase)[None, :]) @ e2.T
    return math.sqrt(2.0 / n_waves) * vals.real


def simulate_berry_2d(grid, n_waves, n_paths, seed):
    """Random-wave approximation of the field with covariance ``J_0(|z|)``.

    Wave directions and phases are uniform; the synthesis bias of the
    covariance is of order ``n_waves^{-1/2}``.  The grid spacing must not
    exceed ``pi/4`` (eight nodes per wavelength).
    """
    if n_waves < 64:
        raise ValueError("Berry synthesis needs n_waves >= 64")
    if grid.spacing > BERRY_MAX_SPACING + 1e-15:
        raise ValueError(f"Berry grid spacing must be <= pi/4, got {grid.spacing}")
    vals = np.stack([berry_path(grid, n_waves, seed, p) for p in range(n_paths)])
    return FieldSample(grid, vals, seed, "berry_random_waves", {"n_waves": n_waves})


def empirical_covariance(sample, offset):
    """Mean of ``B_x B_{x + offset}`` over grid pairs, with its standard error.

    ``offset`` is an integer node offset per axis.  Each path contributes one
    spatial average; the standard error is the spread of these averages
    across paths divided by ``sqrt(n_paths)``.
    """
    off = np.atleast_1d(np.asarray(offset, dtype=int))
    if off.size != sample.dim:
        raise ValueError("offset needs one entry per axis")
    v = sample.values
    a = [slice(None)]
    b = [slice(None)]
    for k, o in enumerate(off):
        n = sample.grid.counts[k]
        if abs(o) >= n:
            raise ValueError(f"offset {o} exceeds grid extent {n} on axis {k}")
        a.append(slice(max(0, -o), n - max(0, o)))
        b.append(slice(max(0, o), n - max(0, -o)))
    prod = v[tuple(a)] * v[tuple(b)]
    per = prod.reshape(sample.n_paths, -1).mean(axis=1)
    se = per.std(ddof=1) / math.sqrt(per.size) if per.size > 1 else float("nan")
    return float(per.mean()), float(se)


# ----------------------------------------------------------------------------
# set-indexed functionals
# ----------------------------------------------------------------------------
def _subcell_offsets(dim, n=32):
    """Deterministic stratified points in the unit cell, centred at 0."""
    if dim == 1:
        return ((np.arange(n) + 0.5) / n - 0.5)[:, None]
    # Fibonacci lattice (n = 34 is the next Fibonacci number above 32)
    fib = 34
    k = np.arange(fib)
    pts = np.stack([(k + 0.5) / fib, np.mod(k * 21 / fib + 0.5 / fib, 1.0)], axis=1)
    return pts - 0.5


def region_weights(grid, region, t=1.0):
    """Cell-volume weights of grid nodes for the region ``tD``.

    Interior cells weigh the full cell volume; cells crossing the boundary
    weigh the fraction of sub-cell points inside ``tD``.

    Raises
    ------
    GeometryError
        if ``tD`` is not covered by the grid's cells.
    """
    R = region.scale(t) if t != 1.0 else region
    if R.dim != grid.dim:
        raise GeometryError("region and grid dimensions differ")
    lo, hi = R.bounds()
    s = grid.spacing
    g_lo = np.asarray(grid.origin) - 0.5 * s
    g_hi = np.asarray(grid.origin) + (np.asarray(grid.counts) - 0.5) * s
    if np.any(lo < g_lo - 1e-12) or np.any(hi > g_hi + 1e-12):
        raise GeometryError(
            f"region exceeds the grid: needs [{lo.tolist()}, {hi.tolist()}], "
            f"grid covers [{g_lo.tolist()}, {g_hi.tolist()}]")
    pts = grid.points()
    cell = s ** grid.dim
    # only nodes whose cell meets the bounding box matter
    near = np.all((pts >= lo - s) & (pts <= hi + s), axis=1)
    idx = np.nonzero(near)[0]
    p = pts[idx]
    corners = np.array(np.meshgrid(*[[-0.5, 0.5]] * grid.dim, indexing="ij")).reshape(
        grid.dim, -1).T * s
    inside_c = np.stack([R.contains(p + c) for c in corners], axis=1)
    centre = R.contains(p)
    full = np.all(inside_c, axis=1) & centre
    empty = ~np.any(inside_c, axis=1) & ~centre
    mixed = ~(full | empty)
    w = np.zeros(pts.shape[0])
    w[idx[full]] = cell
    if np.any(mixed):
        offs = _subcell_offsets(grid.dim) * s
        pm = p[mixed]
        frac = np.mean(np.stack([R.contains(pm + o) for o in offs], axis=1), axis=1)
        w[idx[mixed]] = cell * frac
    return w.reshape(grid.counts)


def _apply_phi(phi, values):
    if phi is None:
        return values
    return np.asarray(phi(values), dtype=float)


def integrate_functional(sample, phi, region, t=1.0, weights=None):
    """``int_{tD} phi(B_x) dx`` per path by a weighted Riemann sum.

    ``phi`` is a vectorised callable (or :class:`~setcov.hermite.HermiteExpansion`);
    ``weights`` may be precomputed with :func:`region_weights`.
    """
    if weights is None:
        weights = region_weights(sample.grid, region, t)
    vals = _apply_phi(phi, sample.values)
    return np.tensordot(vals, weights, axes=sample.dim)
