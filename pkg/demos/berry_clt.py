"""Random waves in the plane: Gaussian fluctuations and reduction to one chaos.

A Berry field is simulated as a superposition of plane waves with uniformly
random directions and phases.  For phi = H_2 the integrals over t-dilates of
concentric disks of radii 1 and 2 are asymptotically Gaussian with the
correlation implied by the limit covariance at index alpha = 1.  For
phi = H_2 + 0.5 H_6 the statistic is compared with its H_2 part: the
mean-square distance between the two standardised statistics shrinks as t
grows, roughly like c / t: the H_2 variance grows like t^3 and the H_6
variance like t^2, but c carries the factor 6! = 720, so at desk-scale t
the distance is still far from zero.

Run:  python3 demos/berry_clt.py    (about half a minute)
"""

import numpy as np
from scipy import stats

import setcov
from setcov import experiments

DISKS = [setcov.ball([0.0, 0.0], 1.0), setcov.ball([0.0, 0.0], 2.0)]


def h2(x):
    return x * x - 1.0


def h6(x):
    return x ** 6 - 15 * x ** 4 + 45 * x ** 2 - 15


def simulate(t, n_paths, seed, n_waves=256):
    grid = setcov.Grid.covering([-2 * t - 1, -2 * t - 1], [2 * t + 1, 2 * t + 1], np.pi / 4)
    return setcov.simulate_berry_2d(grid, n_waves, n_paths, seed)


def standardise(x):
    return (x - x.mean()) / x.std()


def main():
    t = 32.0
    sample = simulate(t, 200, seed=11)
    stats_ = [setcov.integrate_functional(sample, h2, D, t) for D in DISKS]
    corr = np.corrcoef(stats_)[0, 1]
    M, _ = setcov.limit_cov_matrix(DISKS, 1.0)
    print(f"t = {t:g}, 200 paths, phi = H_2")
    print(f"  empirical correlation {corr:.3f}; limit {M[0, 1] / np.sqrt(M[0, 0] * M[1, 1]):.3f}")
    for D, s in zip(DISKS, stats_):
        ks = stats.kstest(standardise(s), "norm").statistic
        print(f"  radius {D.params['radius']:g}: KS distance to N(0,1) {ks:.3f}")
    print()
    print("phi = H_2 + 0.5 H_6 against its H_2 part (unit disk)")
    for t in (8.0, 16.0, 32.0):
        sample = simulate(t, 200, seed=12)
        a = setcov.integrate_functional(sample, h2, DISKS[0], t)
        b = a + 0.5 * setcov.integrate_functional(sample, h6, DISKS[0], t)
        dist = np.mean((standardise(a) - standardise(b)) ** 2)
        print(f"  t = {t:4g}: mean-square distance {dist:.3f}")
    print()
    print("the same experiments through the report layer:")
    cfg = {"experiment": "clt", "field": "berry", "phi": "hermite:q=2",
           "sets": [{"kind": "ball", "center": [0.0, 0.0], "radius": r} for r in (1.0, 2.0)],
           "t": 16.0, "n_paths": 200, "seed": 13, "tolerances": {"corr_abs": 0.15}}
    rep = experiments.run(cfg, "clt")
    for row in rep.rows:
        print(f"  {row.name:20s} {row.empirical:9.4f}  {row.verdict}")


if __name__ == "__main__":
    main()
