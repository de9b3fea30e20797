"""Fractional Gaussian noise: finite-t covariances approach the fBM covariance.

For fGn with Hurst index H = 0.3 the growth function w_t is regularly varying
with index 2H - 1 = -0.4.  The normalised covariance of the integrals over tD
and tL then converges to the covariance of fractional Brownian motion at the
endpoints of D = [0, 1] and L = [0, 2].  This script prints the finite-t values
next to the limit, which is computed both by polar quadrature and in closed form.

Run:  python3 demos/fbm_limit.py
"""

import setcov
from setcov import limitcov

H = 0.3
ALPHA = 2 * H - 1
D, L = setcov.interval(0.0, 1.0), setcov.interval(0.0, 2.0)


def fbm_cov(s, r):
    return 0.5 * (s ** (2 * H) + r ** (2 * H) - abs(r - s) ** (2 * H))


def main():
    model = setcov.fgn_model(H)
    fit = setcov.fit_rv_index([10.0 * 2 ** k for k in range(14)],
                              [model.wt(10.0 * 2 ** k) for k in range(14)])
    print(f"fitted index of w_t: {fit.require_alpha():+.6f}  (expected {ALPHA:+.1f})")

    lim = setcov.limit_cov(D, L, ALPHA)
    closed = limitcov.limit_cov_interval(1.0, 2.0, ALPHA)
    # fBM covariance in the same normalisation: divide by 2H
    print(f"limit (quadrature) {lim.value:.9f} +- {lim.error:.1e}")
    print(f"limit (closed)     {closed:.9f}   fBM cov / 2H = {fbm_cov(1, 2) / (2 * H):.9f}")
    print()
    print(f"{'t':>8}  {'finite t':>12}  {'rel. error':>10}")
    for t in (1e1, 1e2, 1e3, 1e4, 1e5):
        v = setcov.normalized_cov_finite_t(model, D, L, t)
        print(f"{t:8.0e}  {v:12.9f}  {abs(v / closed - 1):10.2e}")


if __name__ == "__main__":
    main()
