"""Bessel functions J0 and J1 of the first kind.

Power series (compensated summation) for ``x < 12`` and the Hankel
asymptotic expansion beyond.  Absolute error is below 1e-10 on [0, 1e5].
"""

import numpy as np

SERIES_CUTOFF = 12.0
_N_SERIES = 60
_N_HANKEL = 24


def _series(x, order):
    # sum_k (-1)^k (x/2)^(2k+order) / (k! (k+order)!)
    y = 0.25 * x * x
    term = (0.5 * x) ** order
    if order == 1:
        term = term / 1.0
    total = term.copy()
    comp = np.zeros_like(x)
    for k in range(1, _N_SERIES):
        term = -term * y / (k * (k + order))
        # Kahan summation
        t = term - comp
        s = total + t
        comp = (s - total) - t
        total = s
    return total


def _hankel_coeffs(nu, count):
    mu = 4.0 * nu * nu
    a = [1.0]
    for k in range(1, count):
        a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (k * 8.0))
    return a


_A0 = _hankel_coeffs(0.0, _N_HANKEL)
_A1 = _hankel_coeffs(1.0, _N_HANKEL)


def _hankel(x, nu, coeffs):
    inv = 1.0 / x
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    powx = np.ones_like(x)
    for k, c in enumerate(coeffs):
        term = c * powx
        if k % 2 == 0:
            p += term if (k // 2) % 2 == 0 else -term
        else:
            q += term if (k // 2) % 2 == 0 else -term
        powx = powx * inv
    chi = x - (0.5 * nu + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _eval(x, order, coeffs):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax < SERIES_CUTOFF
    if np.any(small):
        out[small] = _series(ax[small], order)
    if np.any(~small):
        out[~small] = _hankel(ax[~small], float(order), coeffs)
    if order == 1:
        out = np.where(x < 0, -out, out)
    return out if out.ndim else float(out)


def bessel_j0(x):
    """J0(x); even in x."""
    return _eval(x, 0, _A0)


def bessel_j1(x):
    """J1(x); odd in x."""
    return _eval(x, 1, _A1)
