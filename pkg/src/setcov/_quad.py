"""Vectorised panel quadrature.

All integrands are called with a 1-D float array and must return an array of
the same shape.  Each panel's 16-point Gauss-Legendre estimate is compared with the sum over
its two halves; panels are bisected until the summed discrepancy meets the
tolerance.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import QuadratureError

N_NODES = 16


@lru_cache(maxsize=None)
def gauss_legendre(n=N_NODES):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=None)
def gauss_jacobi(n, power):
    """Nodes/weights on [0, 1] for the weight ``u**power``."""
    x, w = roots_jacobi(n, 0.0, power)
    u = 0.5 * (x + 1.0)
    return u, w * 0.5 ** (power + 1.0)


def _gl_batch(f, a, b, n, tags):
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes.ravel(), np.repeat(tags, n)), dtype=float).reshape(nodes.shape)
    return half * (vals @ w)


def _jacobi_batch(f, b, power, n, tags):
    # integral over [0, b] of f(l) * l**power
    u, w = gauss_jacobi(n, power)
    nodes = b[:, None] * u[None, :]
    vals = np.asarray(f(nodes.ravel(), np.repeat(tags, n)), dtype=float).reshape(nodes.shape)
    return b ** (power + 1.0) * (vals @ w)


def integrate_panels(f, edges, *, power=None, rtol=1e-12, atol=0.0,
                     n=N_NODES, max_level=60):
    """Integrate ``f`` over every panel ``[edges[i], edges[i+1]]``.

    If ``power`` is given the integrand is ``f(l) * l**power``; a panel whose
    left edge is 0 is then handled with Gauss-Jacobi nodes so that the
    algebraic singularity is integrated exactly.

    Refinement is global: while the summed error estimate exceeds
    ``max(atol, rtol * sum|I_panel|)``, every panel whose error exceeds its
    fair share is bisected.

    Returns
    -------
    values, errors : arrays of length ``len(edges) - 1``
    """
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2:
        return np.zeros(0), np.zeros(0)
    if np.any(np.diff(edges) < 0):
        raise ValueError("edges must be non-decreasing")
    return integrate_tagged(lambda x, tag: f(x), edges[:-1], edges[1:],
                            np.zeros(edges.size - 1, dtype=int), power=power,
                            rtol=rtol, atol=atol, n=n, max_level=max_level)


def integrate_tagged(f, a, b, tags, *, power=None, rtol=1e-12, atol=0.0,
                     n=N_NODES, max_level=60):
    """Integrate many panels ``[a[i], b[i]]`` of several integrands at once.

    ``f(x, tag)`` evaluates integrand ``tag[j]`` at ``x[j]``.  The tolerance
    applies to the sum over all panels, so one refinement loop serves every
    integrand.  Returns per-panel values and error estimates.
    """
    a0 = np.asarray(a, dtype=float)
    b0 = np.asarray(b, dtype=float)
    npan = a0.size
    if npan < 1:
        return np.zeros(0), np.zeros(0)

    if power is None:
        g = f
    else:
        def g(x, tag):
            return np.asarray(f(x, tag), dtype=float) * x ** power

    def halves(a, b, jac, tg):
        mid = 0.5 * (a + b)
        left = np.zeros(a.size)
        right = _gl_batch(g, mid, b, n, tg) if a.size else np.zeros(0)
        if np.any(~jac):
            left[~jac] = _gl_batch(g, a[~jac], mid[~jac], n, tg[~jac])
        if np.any(jac):
            left[jac] = _jacobi_batch(f, mid[jac], power, n, tg[jac])
        return left, right

    owner = np.arange(npan)
    keep = b0 > a0
    a, b, owner = a0[keep], b0[keep], owner[keep]
    tg = np.asarray(tags)[keep]
    jac = np.zeros(a.size, dtype=bool)
    if power is not None:
        jac = a == 0.0
    coarse = np.zeros(a.size)
    if np.any(~jac):
        coarse[~jac] = _gl_batch(g, a[~jac], b[~jac], n, tg[~jac])
    if np.any(jac):
        coarse[jac] = _jacobi_batch(f, b[jac], power, n, tg[jac])
    left, right = halves(a, b, jac, tg)
    fine = left + right
    err = np.abs(fine - coarse)
    span = np.maximum(np.abs(a0), np.abs(b0))
    xscale = max(float(span.max()), 1e-300)
    prev_total = float(np.sum(coarse))

    for _ in range(max_level * 4):
        tol = max(atol, rtol * float(np.sum(np.abs(fine))))
        frozen = (b - a) <= 1e-14 * xscale
        if float(np.sum(err)) <= tol or not np.any(~frozen & (err > 0)):
            break
        active = ~frozen
        share = tol / max(int(np.sum(active)), 1)
        sel = active & (err > share)
        if not np.any(sel):
            sel = active & (err >= np.max(err[active]))
        ks = ~sel
        mid = 0.5 * (a[sel] + b[sel])
        na = np.concatenate([a[sel], mid])
        nb = np.concatenate([mid, b[sel]])
        nco = np.concatenate([left[sel], right[sel]])
        njac = np.concatenate([jac[sel], np.zeros(int(sel.sum()), dtype=bool)])
        nown = np.concatenate([owner[sel], owner[sel]])
        ntg = np.concatenate([tg[sel], tg[sel]])
        nl, nr = halves(na, nb, njac, ntg)
        nfine = nl + nr
        prev_total = float(np.sum(fine))
        a = np.concatenate([a[ks], na])
        b = np.concatenate([b[ks], nb])
        jac = np.concatenate([jac[ks], njac])
        owner = np.concatenate([owner[ks], nown])
        tg = np.concatenate([tg[ks], ntg])
        left = np.concatenate([left[ks], nl])
        right = np.concatenate([right[ks], nr])
        fine = np.concatenate([fine[ks], nfine])
        err = np.concatenate([err[ks], np.abs(nfine - nco)])
    else:
        raise QuadratureError(
            "adaptive refinement did not converge",
            estimates=(prev_total, float(np.sum(fine))),
        )
    values = np.bincount(owner, weights=fine, minlength=npan)
    errors = np.bincount(owner, weights=err, minlength=npan)
    return values, errors


def integrate(f, a, b, *, breakpoints=(), period=None, power=None,
              rtol=1e-12, atol=0.0):
    """Adaptive integral of ``f`` over ``[a, b]``.

    Breakpoints inside the interval become panel edges; a ``period`` splits
    the range into half-period panels (for oscillatory integrands).

    Returns
    -------
    value, error : float
    """
    edges = panel_edges(a, b, breakpoints=breakpoints, period=period)
    vals, errs = integrate_panels(f, edges, power=power, rtol=rtol, atol=atol)
    return float(np.sum(vals)), float(np.sum(errs))


def panel_edges(a, b, *, breakpoints=(), period=None):
    pts = [a, b]
    bp = np.asarray(breakpoints, dtype=float).ravel()
    pts.extend(bp[(bp > a) & (bp < b)])
    if period is not None and period > 0:
        step = 0.5 * period
        first = np.ceil(a / step) * step
        pts.extend(np.arange(first, b, step))
    e = np.unique(np.asarray(pts, dtype=float))
    return e[(e >= a) & (e <= b)]


def cumulative_integral(f, nodes, *, breakpoints=(), period=None, rtol=1e-12,
                        atol=0.0):
    """Return ``F(x) = int_0^x f`` at every entry of ``nodes`` (any order)."""
    nodes = np.asarray(nodes, dtype=float)
    flat = nodes.ravel()
    top = float(flat.max()) if flat.size else 0.0
    edges = panel_edges(0.0, top, breakpoints=breakpoints, period=period)
    edges = np.unique(np.concatenate([edges, flat]))
    vals, _ = integrate_panels(f, edges, rtol=rtol, atol=atol)
    cum = np.concatenate([[0.0], np.cumsum(vals)])
    idx = np.searchsorted(edges, flat)
    return cum[idx].reshape(nodes.shape)


def pairwise_sum(x):
    """Fixed-order pairwise summation (deterministic reduction tree)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    while x.size > 1:
        if x.size % 2:
            x = np.append(x, 0.0)
        x = x[0::2] + x[1::2]
    return float(x[0])
