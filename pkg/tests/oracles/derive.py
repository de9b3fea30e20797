"""
Independent reference values, computed without the package.

Run ``python3 tests/oracles/derive.py`` to regenerate; the printed values
are frozen as constants in the test modules.
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate, special

mp.mp.dps = 40


def lens_area_unit_disks(dist):
    """Intersection area of two unit disks at centre distance ``dist``."""
    return 2 * math.acos(dist / 2) - (dist / 2) * math.sqrt(4 - dist * dist)


def disk_riesz(alpha):
    """``(alpha / 2 pi) int int_{disk^2} |x-y|^{alpha-2}`` through the set covariogram."""
    val, _ = integrate.quad(lambda r: r ** (alpha - 1) * lens_area_unit_disks(r), 0, 2,
                            limit=200)
    return alpha / (2 * math.pi) * 2 * math.pi * val


def fgn_wt_mp(H, t):
    p = 2 * mp.mpf(H) + 1
    t = mp.mpf(t)
    return ((t + 1) ** p + mp.sign(t - 1) * abs(t - 1) ** p - 2 * t ** p) / p


def fgn_coregvar(H, alpha, Hc, t):
    """``int_0^Hc |w_{lt}/w_t| dl`` at 40 digits."""
    wt = fgn_wt_mp(H, t)
    f = lambda l: abs(fgn_wt_mp(H, l * t) / wt)
    pts = [0, mp.mpf(1) / t, 1, Hc] if Hc > 1 else [0, mp.mpf(1) / t, Hc]
    return mp.quad(f, pts)


def berry_w2(t):
    return 2 * math.pi * t * t * (special.j0(t) ** 2 + special.j1(t) ** 2)


def berry_wq_quad(q, t):
    """``q! 2 pi int_0^t J_0^q r dr`` with scipy on unit panels."""
    edges = np.arange(0.0, t + 1e-12, math.pi)
    if edges[-1] < t:
        edges = np.append(edges, t)
    s = sum(integrate.quad(lambda r: special.j0(r) ** q * r, a, b, epsabs=0, epsrel=1e-13)[0]
            for a, b in zip(edges[:-1], edges[1:]))
    return math.factorial(q) * 2 * math.pi * s


def power_composed_wt(beta, R, t):
    """``R! * 2 int_0^t (1+r^2)^{-R beta/2} dr``, d = 1."""
    v, _ = integrate.quad(lambda r: (1 + r * r) ** (-R * beta / 2), 0, t, limit=500)
    return math.factorial(R) * 2 * v


def main():
    print("lens |z|=1:", repr(lens_area_unit_disks(1.0)))
    print("lens closed form:", repr(2 * math.pi / 3 - math.sqrt(3) / 2))
    print("j0 first zero:", repr(float(special.jn_zeros(0, 1)[0])))
    print("w J0 d=2 t=10:", repr(2 * math.pi * 10 * float(special.j1(10.0))))
    print("disk riesz alpha=1:", repr(disk_riesz(1.0)))
    print("disk riesz alpha=0.5:", repr(disk_riesz(0.5)))
    for t in (0.5, 2.0, 1e4, 1e8):
        print(f"fgn wt H=0.3 t={t}:", repr(float(fgn_wt_mp(0.3, t))))
    print("fgn coregvar H=2 t=1e4:", repr(float(fgn_coregvar(0.3, -0.4, 2, 10 ** 4))))
    print("fgn coregvar limit:", repr(2 ** 0.6 / 0.6))
    print("berry w2 t=200:", repr(berry_w2(200.0)))
    for q, t in ((3, 500.0), (3, 1000.0), (4, 50.0), (4, 500.0), (5, 500.0)):
        print(f"berry w{q} t={t}:", repr(berry_wq_quad(q, t)))
    print("abs_centered a2:", repr(float(mp.sqrt(2 / mp.pi) / 2)))
    ts = np.geomspace(1e3, 1e6, 64)
    print("t log t slope [1e3,1e6]:", repr(float(np.polyfit(np.log(ts), np.log(ts * np.log(ts)), 1)[0])))
    ts = np.geomspace(100, 1000, 16)
    w = [power_composed_wt(0.3, 2, t) for t in ts]
    print("power composed R=2 slope [1e2,1e3]:", repr(float(np.polyfit(np.log(ts), np.log(w), 1)[0])))
    print("fbm corr H=0.3 s=1 r=2:", repr((1 + 2 ** 0.6 - 1) / (2 * 2 ** 0.3)))
    print("interval limit -0.4:", repr(2 ** 0.6 / 1.2))


if __name__ == "__main__":
    main()
