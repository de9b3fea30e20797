"""Covariograms of planar shapes and what they determine.

g_{D,L}(z) is the area of D intersected with L shifted by z.  First the
exact values are set against hit-or-miss Monte Carlo and the integral of g
against |D| |L|.  Then the limit covariance of a square and a triangle is
tabulated over several regular-variation indices; where the Riesz
representation applies (0 < alpha <= d) its Monte Carlo value is shown too.

Run:  python3 demos/covariogram_tour.py
"""

import numpy as np
from scipy.integrate import trapezoid

import setcov
from setcov import geometry

SQUARE = setcov.polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
TRIANGLE = setcov.polygon([(0.5, -0.5), (2.0, 0.0), (0.8, 1.2)])
DISK = setcov.ball([0.7, 0.2], 0.6)


def total_mass(D, L):
    rule = geometry.direction_rule([(D, L)])
    prof = setcov.radial_profile(D, L, thetas=rule.thetas, n_l=400)
    ls = prof.ls
    # trapezoid in l of g(l theta) l, then the direction rule
    per = trapezoid(prof.values * ls, ls, axis=1)
    return float(np.dot(rule.weights, per))


def main():
    rng = np.random.default_rng(0)
    print("exact vs Monte Carlo covariogram, square and triangle")
    for z in rng.uniform(-1, 1, (4, 2)):
        exact = setcov.covariogram_exact(SQUARE, TRIANGLE, z)
        est, se = setcov.covariogram_mc(SQUARE, TRIANGLE, z, n=200_000, seed=1)
        print(f"  z = ({z[0]:+.2f}, {z[1]:+.2f})  exact {exact:.5f}  MC {est:.5f} +- {se:.5f}")
    for name, (D, L) in {"square/triangle": (SQUARE, TRIANGLE),
                         "square/disk": (SQUARE, DISK)}.items():
        if geometry.exact_pair_supported(D, L):
            print(f"{name}: integral of g {total_mass(D, L):.6f}, |D||L| = "
                  f"{D.volume() * L.volume():.6f}")
        else:
            print(f"{name}: no exact covariogram; radial profiles fall back to Monte Carlo")
    print()
    print(f"{'alpha':>6}  {'quadrature':>12}  {'Riesz MC':>18}")
    for alpha in (-0.5, 0.0, 0.5, 1.0, 1.5):
        q = setcov.limit_cov(SQUARE, TRIANGLE, alpha)
        if alpha > 0:
            rz = setcov.limit_cov_riesz(SQUARE, TRIANGLE, alpha, n=400_000, seed=2)
            riesz = f"{rz.value:.5f} +- {rz.stderr:.5f}"
        else:
            riesz = "-"
        print(f"{alpha:6.1f}  {q.value:12.8f}  {riesz:>18}")


if __name__ == "__main__":
    main()
