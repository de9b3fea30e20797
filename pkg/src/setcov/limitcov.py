"""
Limit covariances of scaled set integrals and their finite-``t`` counterparts.

For ``w_t`` regularly varying with index ``alpha`` in ``(-1, d]``,

    Cov(int_{tD} A, int_{tL} A) / (t^d w_t)
        -> (1/omega_{d-1}) int_{S^{d-1}} dtheta int_0^h (-d/dl g_{D,L}(l theta)) l^alpha dl.

:func:`limit_cov` evaluates the right-hand side by tensor quadrature,
:func:`normalized_cov_finite_t` evaluates the left-hand side exactly for a
given kernel, and the remaining functions are closed forms.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _quad, geometry
from .errors import GeometryError, NearCancellationError
from .geometry import sphere_area

NEAR_CANCEL = 1e-12


@dataclass(frozen=True)
class LimitCovResult:
    value: float
    alpha: float
    error: float
    method: str
    stderr: float = 0.0

    def to_dict(self):
        return {"value": self.value, "error_estimate": self.error, "alpha": self.alpha,
                "method": self.method, "stderr": self.stderr}


def _check_alpha(alpha, d):
    if not (-1.0 < alpha <= d):
        raise ValueError(f"alpha must lie in (-1, {d}] for d={d}, got {alpha}")


def limit_cov_interval(s, r, alpha):
    """``(s^{a+1} + r^{a+1} - |r-s|^{a+1}) / (2(a+1))`` for D=[0,s], L=[0,r]."""
    if not (s > 0 and r > 0):
        raise ValueError("interval lengths must be positive")
    if not alpha > -1:
        raise ValueError("alpha must exceed -1")
    p = alpha + 1.0
    return (s ** p + r ** p - abs(r - s) ** p) / (2.0 * p)


def limit_cov_alpha0(D, L, n=10 ** 6, seed=0):
    """``Vol(D ∩ L)``: exact for supported pairs, Monte Carlo otherwise."""
    if geometry.exact_pair_supported(D, L):
        return float(geometry.covariogram_exact(D, L, np.zeros(D.dim)))
    est, _ = geometry.covariogram_mc(D, L, np.zeros(D.dim), n=n, seed=seed)
    return est


def _ray_integrals(rays, alpha, rtol):
    """``int_0^h (-g') l^alpha dl`` for many rays in one refinement loop."""
    a, b, tags = [], [], []
    for k, ray in enumerate(rays):
        e = np.asarray(ray.edges(), dtype=float)
        a.append(e[:-1])
        b.append(e[1:])
        tags.append(np.full(e.size - 1, k))
    a, b, tags = np.concatenate(a), np.concatenate(b), np.concatenate(tags)

    def f(x, tag):
        return geometry.rays_neg_dg(rays, x, tag)

    vals, errs = _quad.integrate_tagged(f, a, b, tags, power=alpha, rtol=rtol, atol=1e-15)
    n = len(rays)
    return (np.bincount(tags, weights=vals, minlength=n),
            np.bincount(tags, weights=errs, minlength=n))


def _values_coefficients(ls, alpha):
    """Weights ``c`` with ``int_0^h (-g') l^alpha dl = c . g`` for piecewise-linear g.

    By parts with ``G = g(0) - g``:
    ``g(0) h^alpha - alpha int_0^h G(l) l^{alpha-1} dl``; only sampled values
    enter, so Monte Carlo noise is not amplified by differencing.
    """
    a, b = ls[:-1], ls[1:]
    n = ls.size
    c = np.zeros(n)
    c[0] = ls[-1] ** alpha if alpha != 0 else 1.0
    if alpha == 0:
        return c
    with np.errstate(divide="ignore", invalid="ignore"):
        m0 = np.where(a > 0, (b ** alpha - a ** alpha) / alpha, np.inf)
        m1 = (b ** (alpha + 1) - a ** (alpha + 1)) / (alpha + 1)
        width = b - a
        left = np.where(a > 0, (b * m0 - m1) / width, 0.0)
        right = np.where(a > 0, (m1 - a * m0) / width, m1 / width)
    e = np.zeros(n)
    e[:-1] += left
    e[1:] += right
    c -= alpha * e.sum() * np.eye(1, n, 0).ravel()
    c += alpha * e
    return c


def limit_cov(D, L, alpha, profile=None, rule=None, rtol=1e-11):
    """Limit covariance by quadrature over directions and radii.

    Parameters
    ----------
    profile : CovariogramProfile, optional
        Sampled profile; required for pairs without an exact path.  The
        radial integral is taken by parts on the sampled values (linear
        between nodes); the error estimate compares with every other node.
    rule : DirectionRule, optional
        Direction quadrature; defaults to :func:`geometry.direction_rule`.
    """
    d = D.dim
    _check_alpha(alpha, d)
    omega = sphere_area(d)
    if profile is not None:
        h = geometry.diameter_bound(D, L)
        if profile.ls[0] > 0 or profile.ls[-1] < h * (1 - 1e-12):
            raise GeometryError("profile does not cover [0, h(D-L)]")
        pr = profile.rule
        if pr is None:
            pr = geometry.DirectionRule(profile.thetas, profile.theta_weights)
        ls = profile.ls
        sub = np.unique(np.append(np.arange(0, ls.size, 2), ls.size - 1))
        c = _values_coefficients(ls, alpha)
        per = profile.values @ c
        half = profile.values[:, sub] @ _values_coefficients(ls[sub], alpha)
        se = 0.0
        if profile.method == "monte_carlo":
            # common random numbers across nodes and directions: add errors linearly
            se = float(np.dot(np.abs(pr.weights), profile.stderr @ np.abs(c))) / omega
        val, th_err = geometry.rule_integral(pr, per)
        l_err = abs(float(np.dot(pr.weights, per - half)))
        return LimitCovResult(val / omega, alpha, (th_err + l_err) / omega,
                              "quadrature", se)
    if not geometry.exact_pair_supported(D, L):
        raise GeometryError("pair has no exact covariogram; pass a Monte Carlo profile")
    if rule is None:
        rule = geometry.direction_rule([(D, L)])
    per, errs = _ray_integrals(geometry.exact_rays(D, L, rule.thetas),
                               alpha, rtol)
    val, th_err = geometry.rule_integral(rule, per)
    l_err = float(np.dot(np.abs(rule.weights), errs))
    return LimitCovResult(val / omega, alpha, (th_err + l_err) / omega, "quadrature")


def limit_cov_matrix(sets, alpha, n_directions=64, rtol=1e-11):
    """Matrix ``M_ij = limit_cov(D_i, D_j, alpha)`` with one shared direction rule.

    The uniform rule is symmetric under ``theta -> -theta``; each antipodal
    pair of directions contributes a covariance matrix of one-dimensional
    sections, so ``M`` is positive semidefinite for ``alpha <= 1``.

    Returns
    -------
    M, err : arrays of shape ``(n, n)``
    """
    return limit_cov_matrices(sets, [alpha], n_directions, rtol)[0]


def limit_cov_matrices(sets, alphas, n_directions=64, rtol=1e-11):
    """:func:`limit_cov_matrix` for several indices, sharing the exact rays."""
    d = sets[0].dim
    for alpha in alphas:
        _check_alpha(alpha, d)
    rule = geometry.uniform_directions(d, n_directions)
    n = len(sets)
    omega = sphere_area(d)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    nt = len(rule.thetas)
    rays = [r for i, j in pairs for r in geometry.exact_rays(sets[i], sets[j], rule.thetas)]
    out = []
    for alpha in alphas:
        per, e = _ray_integrals(rays, alpha, rtol)
        per, e = per.reshape(len(pairs), nt), e.reshape(len(pairs), nt)
        M = np.zeros((n, n))
        err = np.zeros((n, n))
        for k, (i, j) in enumerate(pairs):
            M[i, j] = M[j, i] = float(np.dot(rule.weights, per[k])) / omega
            err[i, j] = err[j, i] = float(np.dot(rule.weights, e[k])) / omega
        out.append((M, err))
    return out


def limit_cov_riesz(D, L, alpha, n=10 ** 6, seed=0, chunk=2 ** 17):
    """``(alpha/omega_{d-1}) int_D int_L |x-y|^{alpha-d} dx dy`` by Monte Carlo.

    Polar importance sampling: ``X`` uniform in ``D``, ``theta`` uniform on
    the sphere and ``r = h U^{1/alpha}`` so that the weight ``r^{alpha-1}`` is
    absorbed; the estimator is ``Vol(D) h^alpha P(X + r theta in L)``, which
    has finite variance.  At ``alpha = d`` the closed form is returned.

    Returns
    -------
    LimitCovResult with ``stderr`` set.
    """
    d = D.dim
    if not (0.0 < alpha <= d):
        raise ValueError(f"Riesz form needs alpha in (0, {d}]")
    if n < 10 ** 4:
        raise ValueError("limit_cov_riesz needs n >= 10^4")
    vd, vl = geometry.volume(D), geometry.volume(L)
    if alpha == d:
        value = d / sphere_area(d) * vd * vl
        return LimitCovResult(value, alpha, 0.0, "closed_form", 0.0)
    h = geometry.diameter_bound(D, L)
    hits = 0
    for c, start in enumerate(range(0, n, chunk)):
        m = min(chunk, n - start)
        rng = np.random.default_rng([seed, c])
        x = D.sample(rng, m)
        g = rng.standard_normal((m, d))
        g /= np.linalg.norm(g, axis=1)[:, None]
        r = h * rng.random(m) ** (1.0 / alpha)
        hits += int(np.count_nonzero(L.contains(x + g * r[:, None])))
    p = hits / n
    scale = vd * h ** alpha
    return LimitCovResult(scale * p, alpha, 0.0, "riesz_mc",
                          scale * math.sqrt(p * (1 - p) / n))


# ----------------------------------------------------------------------------
# finite t
# ----------------------------------------------------------------------------
def _inner_radial(model, d):
    """``W(s) = int_0^s r^{d-1} k(r) dr`` as a vectorised function."""
    omega = sphere_area(d)
    if model.wt_exact is not None:
        return lambda s: np.where(s > 0, model.wt_exact(np.maximum(s, 1e-300)), 0.0) / omega

    def W(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        if np.any(pos):
            out[pos] = _quad.cumulative_integral(
                lambda r: np.asarray(model.radial(r), float) * r ** (d - 1), s[pos],
                breakpoints=model.breakpoints, period=model.period, rtol=1e-12)
        return out
    return W


def _inner_general(model, d, n_directions):
    """Angular average ``int dtheta W_theta(s)`` for a non-radial kernel."""
    rule = geometry.uniform_directions(d, n_directions)

    def W(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        for th, wgt in zip(rule.thetas, rule.weights):
            f = lambda r, th=th: np.asarray(model(np.outer(r, th)), float) * r ** (d - 1)
            if np.any(pos):
                out[pos] += wgt * _quad.cumulative_integral(
                    f, s[pos], breakpoints=model.breakpoints, period=model.period,
                    rtol=1e-10)
        return out
    return W


def normalized_cov_finite_t(model, D, L, t, rule=None, rtol=1e-10, n_directions=64):
    """``Cov(int_{tD} A, int_{tL} A) / (t^d w_t)`` for kernel ``model``.

    Uses the polar identity
    ``w_t^{-1} int dtheta int_0^h (-dg/dl)(l theta) W_theta(t l) dl`` with
    ``W_theta(s) = int_0^s r^{d-1} K(r theta) dr``.  Non-radial kernels need
    concentric balls (the profile is then direction-free).

    Raises
    ------
    NearCancellationError
        when ``|w_t| < 1e-12 K(0) t^d``.
    """
    d = D.dim
    if model.dim != d:
        raise ValueError(f"kernel dimension {model.dim} differs from set dimension {d}")
    if not geometry.exact_pair_supported(D, L):
        raise GeometryError("finite-t covariance needs an exact covariogram pair")
    t = float(t)
    if model.is_radial:
        W = _inner_radial(model, d)
        wt = sphere_area(d) * float(W(np.array([t]))[0])
        if rule is None:
            rule = geometry.direction_rule([(D, L)])
        thetas, weights = rule.thetas, rule.weights
    else:
        if not (geometry._concentric_balls(D, L)):
            raise GeometryError("non-radial kernels need concentric balls")
        W = _inner_general(model, d, n_directions)
        wt = float(W(np.array([t]))[0])
        thetas = geometry.uniform_directions(d, 2).thetas[:1]
        weights = np.array([1.0])
    k0 = model.value_at_zero
    if not np.isfinite(wt) or abs(wt) < NEAR_CANCEL * abs(k0) * t ** d:
        raise NearCancellationError(
            f"w_t = {wt:.3g} at t={t:g} is below {NEAR_CANCEL:g} K(0) t^d")
    period = None if model.period is None else model.period / t
    total = 0.0
    for th, wgt in zip(thetas, weights):
        ray = geometry.exact_ray(D, L, th)
        bps = ray.breakpoints
        if model.is_radial and model.breakpoints:
            kb = np.asarray(model.breakpoints, float) / t
            bps = np.concatenate([bps, kb])
        val, _ = _quad.integrate(lambda l: ray.neg_dg(l) * W(t * l), 0.0, ray.h,
                                 breakpoints=bps, period=period, rtol=rtol,
                                 atol=1e-300)
        total += wgt * val
    return total / wt
