"""
Regular variation of the ball integrals ``w_t = int_{|z| <= t} K(z) dz``.

``w`` is regularly varying with index alpha when ``w_{lt} / w_t -> l^alpha``.
This module computes ``w_t`` (radial quadrature, Monte Carlo, spectral
representation), estimates alpha at finite ``t``, certifies Potter bounds
and checks the integral limit ``int_0^H |w_{lt}/w_t| dl -> H^{alpha+1}/(alpha+1)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _quad
from .errors import NotRegularlyVaryingError, PotterError, QuadratureError
from .geometry import sphere_area, unit_ball_volume
from .special import bessel_j1

# sup_{s > 0} sqrt(s) |J_1(s)|, rounded up
J1_ENVELOPE = 0.8251

# w_t = SPECTRAL_CONSTANT[d] * t^d * psi_mass * int f(r) F(rt) dr for the
# Fourier convention K(z) = int exp(i<lambda, z>) G(d lambda); see
# calibrate_spectral_constant.
SPECTRAL_CONSTANT = {1: 1.0, 2: 1.0}


def _radial_parts(k, d):
    """Return (callable k, breakpoints, period) from a model or plain callable."""
    if hasattr(k, "radial"):
        return k.radial, tuple(k.breakpoints), k.period
    return k, (), None


def wt_radial(k, d, t, *, breakpoints=None, period=None, rtol=1e-12):
    """``w_t = omega_{d-1} int_0^t k(r) r^{d-1} dr`` by adaptive panel quadrature.

    ``k`` is a radial :class:`~setcov.kernels.CovarianceModel` or a vectorised
    callable.  ``t`` may be a scalar or an array (one pass with prefix sums).
    Oscillatory kernels get half-period panels.

    Raises
    ------
    QuadratureError
        carrying the last two estimates when refinement fails.
    """
    f, bps, per = _radial_parts(k, d)
    if breakpoints is not None:
        bps = tuple(breakpoints)
    if period is not None:
        per = period
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("w_t needs t > 0")

    def integrand(r):
        return np.asarray(f(r), dtype=float) * r ** (d - 1)

    vals = _quad.cumulative_integral(integrand, t, breakpoints=bps, period=per,
                                     rtol=rtol)
    out = sphere_area(d) * vals
    return float(out) if out.ndim == 0 else out


def _ball_points(rng, n, d, t):
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    r = t * rng.random(n) ** (1.0 / d)
    return g * r[:, None]


def wt_general(K, d, t, n=10 ** 5, seed=0, chunk=2 ** 16):
    """Monte Carlo ``w_t``: ``Vol(B_t) * mean K(X)`` with ``X`` uniform in ``B_t``.

    Returns ``(estimate, stderr)``; deterministic given ``seed``.
    """
    if n < 10 ** 4:
        raise ValueError("wt_general needs n >= 10^4")
    if d > 3:
        raise ValueError("wt_general supports d <= 3")
    sums, sq = [], []
    for c, start in enumerate(range(0, n, chunk)):
        m = min(chunk, n - start)
        rng = np.random.default_rng([seed, c])
        v = np.asarray(K(_ball_points(rng, m, d, t)), dtype=float)
        sums.append(v.sum())
        sq.append((v * v).sum())
    mean = _quad.pairwise_sum(sums) / n
    var = max(_quad.pairwise_sum(sq) / n - mean * mean, 0.0)
    vol = unit_ball_volume(d) * t ** d
    return vol * mean, vol * math.sqrt(var / (n - 1))


# ----------------------------------------------------------------------------
# index estimation
# ----------------------------------------------------------------------------
@dataclass
class RegVarFit:
    """Result of :func:`fit_rv_index`.

    ``alpha`` is ``None`` when the samples change sign on the top decade;
    use :meth:`require_alpha` in any consumer.
    """

    alpha: float
    t_lo: float
    t_hi: float
    slope_stderr: float
    residual_max: float
    eventually_positive: bool
    ts: np.ndarray = field(repr=False, default=None)
    slowly_varying: np.ndarray = field(repr=False, default=None)
    karamata_alpha: float = None
    karamata_agrees: bool = None
    sign_changes: int = 0

    def require_alpha(self):
        if not self.eventually_positive or self.alpha is None:
            raise NotRegularlyVaryingError(
                f"not regularly varying (sign changes: {self.sign_changes} on the "
                f"top decade of [{self.t_lo:g}, {self.t_hi:g}])")
        return self.alpha


def fit_rv_index(ts, ws, karamata_tol=0.05):
    """Estimate the regular-variation index from samples ``(t, w_t)``.

    Least squares of ``log w`` on ``log t`` over the upper half of the log
    range, cross-checked by ``log2(w_{2t}/w_t)`` over the top five doublings
    (interpolated in log-log).
    """
    ts = np.asarray(ts, dtype=float)
    ws = np.asarray(ws, dtype=float)
    if ts.size < 8:
        raise ValueError("fit_rv_index needs at least 8 samples")
    if np.unique(ts).size != ts.size:
        raise ValueError("sample abscissae must be distinct")
    order = np.argsort(ts)
    ts, ws = ts[order], ws[order]
    if ts[0] <= 0 or ts[-1] / ts[0] < 100.0 * (1 - 1e-12):
        raise ValueError("samples must span at least two decades of t > 0")
    top = ts >= ts[-1] / 10.0
    signs = np.sign(ws[top])
    changes = int(np.sum(signs[1:] != signs[:-1]))
    if np.any(ws[top] <= 0):
        return RegVarFit(None, ts[0], ts[-1], math.nan, math.nan, False, ts, None,
                         sign_changes=max(changes, 1) if np.any(ws[top] < 0) else changes)
    mid = 0.5 * (math.log(ts[0]) + math.log(ts[-1]))
    win = (np.log(ts) >= mid - 1e-12) & (ws > 0)
    x, y = np.log(ts[win]), np.log(ws[win])
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(x.size - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(np.sum((x - x.mean()) ** 2))
    slope = float(coef[0])
    se = math.sqrt(s2 / sxx) if sxx > 0 else math.nan

    # Karamata check on the top five doublings
    pos = ws > 0
    lt, lw = np.log(ts[pos]), np.log(ws[pos])
    hi = lt[-1]
    k_alpha = None
    agrees = None
    if hi - 5 * math.log(2) >= lt[0]:
        starts = hi - math.log(2) * np.arange(1, 6)
        ratios = (np.interp(starts + math.log(2), lt, lw) - np.interp(starts, lt, lw))
        k_alpha = float(np.mean(ratios / math.log(2)))
        agrees = abs(k_alpha - slope) <= karamata_tol
    return RegVarFit(slope, float(np.exp(x[0])), float(np.exp(x[-1])), se,
                     float(np.max(np.abs(resid))), True, ts,
                     ws * ts ** (-slope), k_alpha, agrees, changes)


def count_sign_changes(values):
    s = np.sign(np.asarray(values, dtype=float))
    s = s[s != 0]
    return int(np.sum(s[1:] != s[:-1]))


# ----------------------------------------------------------------------------
# Potter bounds
# ----------------------------------------------------------------------------
@dataclass
class PotterCertificate:
    """``|w_{lt}/w_t| <= A max(l^{alpha+delta}, l^{alpha-delta})`` for l > X/t, t > X."""

    A: float
    delta: float
    alpha: float
    X: float
    margin: float
    rel_margin: float
    n_checked: int
    l_grid: np.ndarray = field(repr=False, default=None)
    t_grid: np.ndarray = field(repr=False, default=None)


def _sampler(w):
    if hasattr(w, "wt"):
        return w.wt
    return w


def potter_certify(w, alpha, A=2.0, delta=0.1, t_grid=None, l_grid=None,
                   X_max=2.0 ** 16):
    """Smallest dyadic threshold ``X`` for which the Potter bound holds on the grid.

    Parameters
    ----------
    w : callable or CovarianceModel
        Vectorised sampler ``t -> w_t``.
    t_grid, l_grid : arrays, optional
        Defaults: ``t`` on ``[1, 2^20]`` with 8 points per octave and ``l`` on
        ``[2^-12, 2^8]`` with 4 points per octave.

    Raises
    ------
    PotterError
        if no ``X <= X_max`` satisfies the bound.
    """
    if not A > 1 or not delta > 0:
        raise ValueError("Potter bound needs A > 1 and delta > 0")
    f = _sampler(w)
    ts = np.asarray(t_grid if t_grid is not None else 2.0 ** np.arange(0, 20.001, 0.125))
    ls = np.asarray(l_grid if l_grid is not None else 2.0 ** np.arange(-12, 8.001, 0.25))
    wt = np.asarray(f(ts), dtype=float)
    wlt = np.asarray(f((ls[:, None] * ts[None, :]).ravel()), dtype=float).reshape(
        ls.size, ts.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(wlt / wt[None, :])
    bound = A * np.maximum(ls ** (alpha + delta), ls ** (alpha - delta))[:, None]
    slack = bound - ratio
    slack = np.where(np.isfinite(slack), slack, -np.inf)
    X = float(2.0 ** math.floor(math.log2(ts.min())))
    while X <= X_max:
        mask = (ts[None, :] > X) & (ls[:, None] > X / ts[None, :])
        mask &= ts[None, :] >= X
        if np.any(mask) and np.all(slack[mask] >= 0):
            rel = float(np.min(slack[mask] / bound[np.nonzero(mask)[0], 0]))
            return PotterCertificate(A, delta, alpha, X, float(np.min(slack[mask])),
                                     rel, int(mask.sum()), ls, ts)
        X *= 2.0
    raise PotterError(
        f"no Potter threshold X <= {X_max:g} for alpha={alpha}, A={A}, delta={delta}; "
        "the index may be misfit or w may not be regularly varying")


# ----------------------------------------------------------------------------
# integral limit
# ----------------------------------------------------------------------------
@dataclass
class CoRegVarRow:
    t: float
    integral: float
    limit: float
    err_abs: float
    err_rel: float


def coregvar_check(w, alpha, H, t_list, rtol=1e-10):
    """Compare ``int_0^H |w_{lt}/w_t| dl`` with ``H^{alpha+1}/(alpha+1)`` per ``t``."""
    if not alpha > -1:
        raise ValueError("coregvar_check needs alpha > -1")
    if not H > 0:
        raise ValueError("coregvar_check needs H > 0")
    f = _sampler(w)
    limit = H ** (alpha + 1) / (alpha + 1)
    rows = []
    for t in t_list:
        wt = float(np.asarray(f(np.array([t])))[0])
        if wt == 0:
            raise ValueError(f"w_t vanishes at t={t}")

        def integrand(l, t=t, wt=wt):
            return np.abs(np.asarray(f(l * t), dtype=float) / wt)

        def scaled(l, t=t, wt=wt):
            return integrand(l, t, wt) / l ** alpha

        # first panel carries the l^alpha weight; geometric panels beyond it
        lo = min(1.0 / t, H)
        head, _ = _quad.integrate(scaled, 0.0, lo, power=alpha, rtol=rtol)
        val = head
        if lo < H:
            n_geo = max(int(math.ceil(math.log2(H / lo))), 1)
            bps = lo * 2.0 ** np.arange(1, n_geo + 1)
            rest, _ = _quad.integrate(integrand, lo, H, breakpoints=bps, rtol=rtol)
            val += rest
        rows.append(CoRegVarRow(float(t), val, limit, abs(val - limit),
                                abs(val - limit) / limit))
    return rows


# ----------------------------------------------------------------------------
# spectral representation
# ----------------------------------------------------------------------------
def ball_fourier(d, s):
    """Fourier transform of the unit-ball indicator at radius ``s``."""
    s = np.asarray(s, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        if d == 1:
            return np.where(s > 0, 2 * np.sin(s) / s, 2.0)
        if d == 2:
            return np.where(s > 0, 2 * math.pi * bessel_j1(s) / s, math.pi)
    raise ValueError("ball_fourier supports d in {1, 2}")


def _tail_factor(d, s):
    # sup_{u >= s} |F(u)|
    if d == 1:
        return 2.0 / s
    return 2 * math.pi * J1_ENVELOPE * s ** -1.5


@dataclass
class SpectralResult:
    value: float
    r_max: float
    tail_bound: float
    quad_error: float


def wt_from_spectral(f, psi_mass, d, t, tol=1e-8, r_max=None, r_cap=1e6):
    """``w_t = c_d t^d psi_mass int_0^inf f(r) F(rt) dr``.

    ``f`` is the radial spectral density, ``F`` the ball-indicator Fourier
    transform.  The range is truncated at the first ``r_max`` (doubling from
    1) at which ``sup_{s >= r_max t} |F(s)| * int_{r_max}^inf |f|`` falls below
    ``tol`` times the running value.

    Raises
    ------
    QuadratureError
        if the tail bound cannot be made small enough below ``r_cap``.
    """
    if d not in (1, 2):
        raise ValueError("wt_from_spectral supports d in {1, 2}")
    t = float(t)

    def integrand(r):
        return np.asarray(f(r), dtype=float) * ball_fourier(d, r * t)

    def abs_f(r):
        return np.abs(np.asarray(f(r), dtype=float))

    period = 2 * math.pi / t
    R = 1.0 if r_max is None else float(r_max)
    value, err = 0.0, 0.0
    done_to = 0.0
    while True:
        v, e = _quad.integrate(integrand, done_to, R, period=period, rtol=1e-13,
                               atol=1e-300)
        value += v
        err += e
        done_to = R
        mass_tail, _ = _quad.integrate(abs_f, R, 64 * R, rtol=1e-8, atol=1e-300)
        tail = _tail_factor(d, R * t) * mass_tail
        if tail <= tol * abs(value) or (value == 0 and tail == 0):
            break
        if r_max is not None or R >= r_cap:
            raise QuadratureError(
                f"spectral tail bound {tail:.3g} exceeds tolerance at r_max={R:g}",
                estimates=(value, value + tail))
        R *= 2.0
    c = SPECTRAL_CONSTANT[d] * t ** d * psi_mass
    return SpectralResult(c * value, R, c * tail, c * err)


def calibrate_spectral_constant(d):
    """Ratio ``w_t / (t^d psi_mass int f F)`` on the Gaussian pair.

    ``K(z) = exp(-|z|^2/2)`` has spectral density ``(2 pi)^{-d/2} exp(-|l|^2/2)``;
    the ratio is 1 for the convention used here.
    """
    t = 3.0
    if d == 1:
        exact = math.sqrt(2 * math.pi) * math.erf(t / math.sqrt(2))
        f = lambda r: np.exp(-0.5 * r * r) / math.sqrt(2 * math.pi)
        mass = 2.0
    else:
        exact = 2 * math.pi * -math.expm1(-0.5 * t * t)
        f = lambda r: r * np.exp(-0.5 * r * r) / (2 * math.pi)
        mass = 2 * math.pi
    res = wt_from_spectral(f, mass, d, t)
    return exact / (res.value / SPECTRAL_CONSTANT[d])
