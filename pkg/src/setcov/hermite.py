"""
Hermite expansions under the standard Gaussian measure.

Probabilists' Hermite polynomials ``H_q`` satisfy ``E[H_q H_r] = q! delta_qr``.
A centred transform ``phi = sum_q a_q H_q`` applied to a Gaussian field with
correlation ``C`` yields the covariance ``K = sum_q q! a_q^2 C^q``, and the
ball integrals decompose as ``w_t = sum_q a_q^2 w_{q,t}``.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _quad
from .errors import KernelError
from .geometry import sphere_area
from .kernels import CovarianceModel

Q_MAX_DEFAULT = 16
RANK_TOL = 1e-10
PARSEVAL_TOL = 1e-8


class HermiteTailWarning(UserWarning):
    """Truncated expansion misses more than the tail tolerance."""


def hermite_eval(q, x):
    """``H_q(x)`` by ``H_{q+1} = x H_q - q H_{q-1}``."""
    if q < 0:
        raise ValueError("Hermite degree must be >= 0")
    x = np.asarray(x, dtype=float)
    h0 = np.ones_like(x)
    if q == 0:
        return h0 if h0.ndim else float(h0)
    h1 = x.copy()
    for k in range(1, q):
        h0, h1 = h1, x * h1 - k * h0
    return h1 if h1.ndim else float(h1)


def hermite_table(q_max, x):
    """Rows ``H_0(x) .. H_{q_max}(x)``; shape ``(q_max + 1,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((q_max + 1,) + x.shape)
    out[0] = 1.0
    if q_max >= 1:
        out[1] = x
    for k in range(1, q_max):
        out[k + 1] = x * out[k] - k * out[k - 1]
    return out


@lru_cache(maxsize=None)
def gauss_hermite(order):
    """Golub-Welsch nodes and weights for the standard Gaussian measure."""
    k = np.arange(1, order)
    J = np.diag(np.sqrt(k), 1) + np.diag(np.sqrt(k), -1)
    nodes, vecs = np.linalg.eigh(J)
    weights = vecs[0] ** 2
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights / weights.sum()


def _gaussian_density(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


@dataclass(frozen=True, eq=False)
class HermiteExpansion:
    """Coefficients ``a_0 = 0, a_1 .. a_qmax`` of a centred transform.

    Attributes
    ----------
    l2_norm2 : float
        ``E[phi^2]`` (``sum_q q! a_q^2`` over all ``q``).
    tail : float
        ``l2_norm2 - sum_{q <= q_max} q! a_q^2`` (non-negative up to rounding).
    """

    coeffs: np.ndarray
    l2_norm2: float
    tail: float
    name: str = "phi"

    @property
    def q_max(self):
        return self.coeffs.size - 1

    @property
    def rank(self):
        tol = RANK_TOL * math.sqrt(self.l2_norm2)
        nz = np.nonzero(np.abs(self.coeffs[1:]) > tol)[0]
        return int(nz[0] + 1) if nz.size else None

    @property
    def weights(self):
        """``q! a_q^2`` for q = 0..q_max."""
        q = np.arange(self.q_max + 1)
        fact = np.array([math.factorial(int(k)) for k in q], dtype=float)
        return fact * self.coeffs ** 2

    def __call__(self, x):
        """Evaluate the truncated series ``sum_q a_q H_q(x)``."""
        tab = hermite_table(self.q_max, x)
        return np.tensordot(self.coeffs, tab, axes=1)

    def composed_model(self, base):
        """Radial covariance model ``K = sum q! a_q^2 C^q`` from a radial base ``C``."""
        if not base.is_radial:
            raise KernelError("composition needs a radial base correlation")
        exp = self
        return CovarianceModel(
            name=f"{base.name}|{self.name}", dim=base.dim,
            value_at_zero=float(np.sum(self.weights)),
            k=lambda r: composed_covariance(exp, base.radial(r))[0],
            breakpoints=base.breakpoints, period=base.period,
            meta={"base": base, "expansion": self})


def expansion_from_coefficients(coeffs, name="coefficients"):
    """Exact expansion from ``{q: a_q}`` or a list ``[a_1, a_2, ...]``."""
    if isinstance(coeffs, dict):
        items = {int(q): float(a) for q, a in coeffs.items()}
    else:
        items = {q + 1: float(a) for q, a in enumerate(coeffs)}
    if any(q < 1 for q in items):
        raise ValueError("coefficients start at q = 1 (phi is centred)")
    q_max = max(items) if items else 1
    a = np.zeros(q_max + 1)
    for q, v in items.items():
        a[q] = v
    a.setflags(write=False)
    fact = np.array([math.factorial(k) for k in range(q_max + 1)], dtype=float)
    return HermiteExpansion(a, float(np.sum(fact * a * a)), 0.0, name)


def _expectations(fn, q_max, order, breakpoints):
    """``E[fn(X) H_q(X)]`` for q = 0..q_max and the variance of ``fn(X)``."""
    if not breakpoints:
        x, w = gauss_hermite(order)
        fx = np.asarray(fn(x), dtype=float)
        tab = hermite_table(q_max, x)
        m = tab @ (w * fx)
        return m, float(np.sum(w * (fx - m[0]) ** 2))
    # piecewise smooth phi: panel quadrature on [-40, 40] split at the kinks
    out = np.zeros(q_max + 1)
    for q in range(q_max + 1):
        out[q], _ = _quad.integrate(
            lambda x, q=q: np.asarray(fn(x), float) * hermite_eval(q, x) * _gaussian_density(x),
            -40.0, 40.0, breakpoints=breakpoints, rtol=1e-14, atol=1e-300)
    var, _ = _quad.integrate(
        lambda x: (np.asarray(fn(x), float) - out[0]) ** 2 * _gaussian_density(x),
        -40.0, 40.0, breakpoints=breakpoints, rtol=1e-14, atol=1e-300)
    return out, var


def hermite_coeffs(phi, q_max=Q_MAX_DEFAULT, order=None, breakpoints=(), name="phi"):
    """Hermite coefficients ``a_q = E[phi H_q] / q!`` of the centred ``phi``.

    Gauss-Hermite quadrature of ``order >= 4 q_max`` nodes is used for smooth
    ``phi``.  For transforms with kinks or jumps, pass their locations in
    ``breakpoints``; the expectations are then computed by panel quadrature
    split at those points (Gauss-Hermite converges only algebraically there).

    Warns
    -----
    HermiteTailWarning
        when ``E[phi^2] - sum q! a_q^2`` exceeds ``1e-8 E[phi^2]``.
    """
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    order = max(order or 0, 4 * q_max, 128)
    if order < 4 * q_max:
        raise ValueError("quadrature order must be >= 4 q_max")
    m, l2 = _expectations(phi, q_max, order, tuple(breakpoints))
    fact = np.array([math.factorial(k) for k in range(q_max + 1)], dtype=float)
    a = m / fact
    a[0] = 0.0
    a.setflags(write=False)
    captured = float(np.sum(fact * a * a))
    tail = l2 - captured
    if tail > PARSEVAL_TOL * max(l2, 1e-300):
        warnings.warn(
            f"Hermite expansion of {name!r} truncated at q_max={q_max} misses "
            f"{tail:.3g} of E[phi^2]={l2:.6g}", HermiteTailWarning, stacklevel=2)
    return HermiteExpansion(a, float(l2), float(max(tail, 0.0)), name)


def composed_covariance(exp, C):
    """``K = sum_{q=1}^{q_max} q! a_q^2 C^q`` and the tail bound ``|C|^{q_max+1} * tail``.

    ``C`` is an array of base-correlation values.
    """
    C = np.asarray(C, dtype=float)
    if np.any(np.abs(C) > 1 + 1e-12):
        raise ValueError("base correlation values must satisfy |C| <= 1")
    C = np.clip(C, -1.0, 1.0)
    w = exp.weights
    out = np.zeros_like(C)
    for q in range(exp.q_max, 0, -1):
        out = (out + w[q]) * C
    bound = np.abs(C) ** (exp.q_max + 1) * exp.tail
    return out, bound


def _base_parts(C):
    if isinstance(C, CovarianceModel):
        if not C.is_radial:
            raise KernelError("w_{q,t} needs a radial base correlation")
        return C.radial, tuple(C.breakpoints), C.period
    return C, (), None


def wq(C, d, q, t, rtol=1e-12):
    """``w_{q,t} = q! omega_{d-1} int_0^t C(r)^q r^{d-1} dr``.

    ``t`` may be an array (one cumulative pass).  Oscillatory base
    correlations are integrated on half-period panels.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    f, bps, per = _base_parts(C)
    t = np.asarray(t, dtype=float)

    def integrand(r):
        return np.asarray(f(r), dtype=float) ** q * r ** (d - 1)

    vals = _quad.cumulative_integral(integrand, t, breakpoints=bps, period=per,
                                     rtol=rtol)
    out = math.factorial(q) * sphere_area(d) * vals
    return float(out) if out.ndim == 0 else out


def wt_composed(exp, C, d, t, tol=None):
    """``w_t = sum_q a_q^2 w_{q,t}`` plus a tail bound.

    The omitted orders contribute at most
    ``tail * omega_{d-1} int_0^t |C|^{q_max+1} r^{d-1} dr``.

    Returns
    -------
    value, tail_bound
    """
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for q in range(1, exp.q_max + 1):
        a = exp.coeffs[q]
        if a != 0.0:
            total = total + a * a * np.asarray(wq(C, d, q, t))
    tail = np.zeros_like(t)
    if exp.tail > 0:
        f, bps, per = _base_parts(C)
        qn = exp.q_max + 1
        absint = _quad.cumulative_integral(
            lambda r: np.abs(np.asarray(f(r), float)) ** qn * r ** (d - 1), t,
            breakpoints=bps, period=per, rtol=1e-10)
        tail = exp.tail * sphere_area(d) * absint
    if tol is not None and np.any(tail > tol * np.abs(total)):
        warnings.warn(f"wt_composed tail bound {float(np.max(tail)):.3g} exceeds "
                      "tolerance", HermiteTailWarning, stacklevel=2)
    if total.ndim == 0:
        return float(total), float(tail)
    return total, tail


# ----------------------------------------------------------------------------
# named transforms
# ----------------------------------------------------------------------------
def _abs_centered(x):
    return np.abs(x) - math.sqrt(2 / math.pi)


def phi_from_spec(spec, q_max=Q_MAX_DEFAULT):
    """Hermite expansion of a named transform or a coefficient list.

    ``"hermite:q=2"``, ``"abs_centered"``, ``"sign"``, ``"cubic"``, or a dict
    ``{"coefficients": {q: a_q}}`` / list ``[a_1, a_2, ...]``.
    """
    if isinstance(spec, HermiteExpansion):
        return spec
    if isinstance(spec, dict):
        if "coefficients" not in spec:
            raise KernelError(f"transform spec {spec!r} lacks 'coefficients'")
        return expansion_from_coefficients(spec["coefficients"])
    if isinstance(spec, (list, tuple)):
        return expansion_from_coefficients(list(spec))
    if not isinstance(spec, str):
        raise KernelError(f"unsupported transform spec {spec!r}")
    if spec.startswith("hermite:"):
        try:
            q = int(spec.split("=", 1)[1])
        except (IndexError, ValueError):
            raise KernelError(f"malformed transform spec {spec!r}") from None
        return expansion_from_coefficients({q: 1.0}, name=spec)
    if spec == "cubic":
        return expansion_from_coefficients({1: 3.0, 3: 1.0}, name=spec)
    if spec == "abs_centered":
        return hermite_coeffs(_abs_centered, q_max, breakpoints=(0.0,), name=spec)
    if spec == "sign":
        return hermite_coeffs(np.sign, q_max, breakpoints=(0.0,), name=spec)
    raise KernelError(f"unknown transform spec {spec!r}")
