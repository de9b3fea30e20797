"""
Covariance models ``K(z) = Cov(A_x, A_{x+z})``.

A :class:`CovarianceModel` is either radial (``K(z) = k(|z|)``) or general
(``K`` evaluated on points).  Named built-ins are created from short specs::

    fgn:H=0.3        fractional Gaussian noise correlation (d = 1)
    berry_j0         J_0(|z|) (d = 2)
    gaussian:s=1     exp(-r^2 / (2 s^2))
    power:beta=0.7   (1 + r^2)^(-beta/2)
    power:alpha=0.5  a pure power normalisation w_t = t^alpha (no kernel)
    constant:c=2     K = c

Tables ``(r, k(r))`` read from CSV are linearly interpolated and refuse to
extrapolate.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import binom, erf

from .errors import KernelError
from .geometry import sphere_area
from .special import bessel_j0, bessel_j1


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """An evaluatable covariance function.

    Attributes
    ----------
    k : callable or None
        Radial profile ``k(r)`` for radial models (vectorised).
    K : callable or None
        General kernel on points of shape ``(n, dim)``.
    breakpoints : tuple
        Radii where ``k`` is not smooth (quadrature panel edges).
    period : float or None
        Oscillation period of ``k`` in ``r``; quadrature uses half-period panels.
    alpha : float or None
        Known regular-variation index of ``w_t``; ``None`` if unknown or absent.
    wt_exact : callable or None
        Closed form of ``w_t = int_{|z| <= t} K(z) dz`` when available.
    """

    name: str
    dim: int
    value_at_zero: float
    k: Optional[Callable] = None
    K: Optional[Callable] = None
    breakpoints: tuple = ()
    period: Optional[float] = None
    alpha: Optional[float] = None
    wt_exact: Optional[Callable] = None
    meta: dict = field(default_factory=dict)

    @property
    def is_radial(self):
        return self.k is not None

    @property
    def has_kernel(self):
        return self.k is not None or self.K is not None

    def __call__(self, z):
        """Evaluate ``K`` at points ``z`` of shape ``(n, dim)`` (or ``(dim,)``)."""
        z = np.asarray(z, dtype=float)
        single = z.ndim <= 1 and (self.dim > 1 or z.ndim == 0)
        zz = z.reshape(-1, self.dim)
        if self.k is not None:
            out = np.asarray(self.k(np.linalg.norm(zz, axis=1)), dtype=float)
        elif self.K is not None:
            out = np.asarray(self.K(zz), dtype=float)
        else:
            raise KernelError(f"model {self.name!r} has no kernel, only w_t")
        return float(out[0]) if single else out

    def radial(self, r):
        if self.k is None:
            raise KernelError(f"model {self.name!r} is not radial")
        return np.asarray(self.k(np.asarray(r, dtype=float)), dtype=float)

    def wt(self, t):
        """``w_t``: closed form when known, otherwise radial quadrature."""
        if self.wt_exact is not None:
            return self.wt_exact(np.asarray(t, dtype=float))
        from .regvar import wt_radial
        return wt_radial(self, self.dim, t)


# ----------------------------------------------------------------------------
# fractional Gaussian noise
# ----------------------------------------------------------------------------
def fgn_correlation(H, z):
    """``C(z) = (|1+z|^{2H} + |1-z|^{2H} - 2|z|^{2H}) / 2``.

    ``H`` must lie in (0, 1/2]; ``H = 1/2`` gives the triangular kernel.
    """
    if not 0.0 < H <= 0.5:
        raise KernelError(f"fGn Hurst index must lie in (0, 1/2], got {H}")
    z = np.abs(np.asarray(z, dtype=float))
    p = 2.0 * H
    out = np.empty_like(z)
    near = z <= 4.0
    zn = z[near]
    out[near] = 0.5 * ((1 + zn) ** p + np.abs(1 - zn) ** p - 2 * zn ** p)
    zf = z[~near]
    out[~near] = 0.5 * zf ** p * _second_difference(p, 1.0 / zf)
    return out if out.ndim else float(out)


def _second_difference(p, x):
    """``(1+x)^p + (1-x)^p - 2`` for ``0 < x <= 1``, free of cancellation."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 0.25
    xs = x[small]
    acc = np.zeros_like(xs)
    x2 = xs * xs
    term = np.ones_like(xs)
    for k in range(1, 40):
        term = term * x2
        acc += binom(p, 2 * k) * term
    out[small] = 2.0 * acc
    xl = x[~small]
    out[~small] = (1 + xl) ** p + (1 - xl) ** p - 2.0
    return out


def fgn_wt(H, t):
    """``w_t = 2 int_0^t C(r) dr = ((t+1)^p + sgn(t-1)|t-1|^p - 2 t^p) / p``, p = 2H+1."""
    t = np.asarray(t, dtype=float)
    p = 2.0 * H + 1.0
    out = np.empty_like(t)
    near = t <= 4.0
    tn = t[near]
    out[near] = ((tn + 1) ** p + np.sign(tn - 1) * np.abs(tn - 1) ** p - 2 * tn ** p) / p
    tf = t[~near]
    out[~near] = tf ** p * _second_difference(p, 1.0 / tf) / p
    return out if out.ndim else float(out)


def fgn_model(H):
    if not 0.0 < H <= 0.5:
        raise KernelError(f"fGn Hurst index must lie in (0, 1/2], got {H}")
    return CovarianceModel(
        name=f"fgn:H={H:g}", dim=1, value_at_zero=1.0,
        k=lambda r: fgn_correlation(H, r), breakpoints=(1.0,),
        alpha=2 * H - 1, wt_exact=lambda t: fgn_wt(H, t), meta={"H": H})


# ----------------------------------------------------------------------------
# other built-ins
# ----------------------------------------------------------------------------
def berry_model():
    return CovarianceModel(
        name="berry_j0", dim=2, value_at_zero=1.0, k=bessel_j0,
        period=2 * math.pi, alpha=None,
        wt_exact=lambda t: 2 * math.pi * t * bessel_j1(t))


def gaussian_model(s=1.0, dim=1):
    s = float(s)
    if not s > 0:
        raise KernelError("gaussian scale must be positive")

    def wt(t):
        t = np.asarray(t, dtype=float)
        if dim == 1:
            return s * math.sqrt(2 * math.pi) * erf(t / (s * math.sqrt(2)))
        if dim == 2:
            return 2 * math.pi * s * s * -np.expm1(-0.5 * (t / s) ** 2)
        from .regvar import wt_radial
        return wt_radial(model, dim, t)

    model = CovarianceModel(
        name=f"gaussian:s={s:g}", dim=dim, value_at_zero=1.0,
        k=lambda r: np.exp(-0.5 * (np.asarray(r) / s) ** 2), alpha=0.0,
        wt_exact=wt if dim <= 2 else None)
    return model


def power_model(beta, dim=1):
    beta = float(beta)
    if not beta > 0:
        raise KernelError("power kernel needs beta > 0")
    alpha = dim - beta if beta < dim else None
    return CovarianceModel(
        name=f"power:beta={beta:g}", dim=dim, value_at_zero=1.0,
        k=lambda r: (1.0 + np.asarray(r) ** 2) ** (-0.5 * beta), alpha=alpha,
        meta={"beta": beta})


def pure_power_model(alpha, dim=1, c=1.0):
    """Normalisation-only model with ``w_t = c t^alpha`` exactly."""
    return CovarianceModel(
        name=f"power:alpha={alpha:g}", dim=dim, value_at_zero=math.inf,
        alpha=float(alpha), wt_exact=lambda t: c * np.asarray(t, dtype=float) ** alpha)


def constant_model(c=1.0, dim=1):
    c = float(c)
    return CovarianceModel(
        name=f"constant:c={c:g}", dim=dim, value_at_zero=c,
        k=lambda r: np.full(np.shape(r), c), alpha=float(dim),
        wt_exact=lambda t: c * sphere_area(dim) / dim * np.asarray(t, dtype=float) ** dim)


def table_model(r, values, dim=1, name="table"):
    """Linear interpolation of ``(r, k(r))``; evaluation beyond the table raises."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != v.shape or r.size < 2:
        raise KernelError("table needs matching 1-D arrays with >= 2 rows")
    if r[0] != 0.0 or np.any(np.diff(r) <= 0):
        raise KernelError("table radii must start at 0 and increase strictly")
    rmax = r[-1]

    def k(x):
        x = np.asarray(x, dtype=float)
        if np.any(x > rmax):
            raise KernelError(
                f"table kernel {name!r} evaluated at r = {float(np.max(x)):g} "
                f"beyond its last row r = {rmax:g}")
        return np.interp(x, r, v)

    return CovarianceModel(name=name, dim=dim, value_at_zero=float(v[0]), k=k,
                           breakpoints=tuple(r[1:-1]), meta={"r_max": rmax})


def table_from_csv(path, dim=1):
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    data = np.array([[float(a), float(b)] for a, b in (row[:2] for row in rows)])
    return table_model(data[:, 0], data[:, 1], dim=dim, name=f"table:{path}")


def _parse_params(spec):
    head, _, rest = spec.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise KernelError(f"malformed kernel parameter {item!r} in {spec!r}")
            try:
                params[key.strip()] = float(val)
            except ValueError:
                raise KernelError(f"non-numeric parameter {item!r} in {spec!r}") from None
    return head.strip(), params


def kernel_from_spec(spec, dim=None):
    """Build a :class:`CovarianceModel` from a named spec or a table path.

    ``dim`` overrides the dimension of dimension-free kernels
    (gaussian, power, constant); fGn is 1-D and Berry 2-D.
    """
    if isinstance(spec, CovarianceModel):
        return spec
    if isinstance(spec, dict) and "table" in spec:
        return table_from_csv(spec["table"], dim=spec.get("dim", dim or 1))
    if not isinstance(spec, str):
        raise KernelError(f"unsupported kernel spec {spec!r}")
    if spec.startswith("table:"):
        return table_from_csv(spec[len("table:"):], dim=dim or 1)
    head, p = _parse_params(spec)
    d = dim or 1
    try:
        if head == "fgn":
            if dim not in (None, 1):
                raise KernelError("fgn kernel is one-dimensional")
            return fgn_model(p["H"])
        if head == "berry_j0":
            if dim not in (None, 2):
                raise KernelError("berry_j0 kernel is two-dimensional")
            return berry_model()
        if head == "gaussian":
            return gaussian_model(p.get("s", 1.0), dim=d)
        if head == "power" and "beta" in p:
            return power_model(p["beta"], dim=d)
        if head == "power" and "alpha" in p:
            return pure_power_model(p["alpha"], dim=d)
        if head == "constant":
            return constant_model(p.get("c", 1.0), dim=d)
    except KeyError as exc:
        raise KernelError(f"kernel spec {spec!r} misses parameter {exc}") from None
    raise KernelError(f"unknown kernel spec {spec!r}")
