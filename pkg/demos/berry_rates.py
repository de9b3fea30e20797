"""Growth of w_{q,t} for powers of the Bessel kernel J_0 in the plane.

The random-wave kernel J_0(|x|) decays like |x|^{-1/2}, so its powers J_0^q
decay like |x|^{-q/2}.  With w_{q,t} = q! times the integral of J_0^q over
the disk of radius t there are four regimes:

* q = 1 oscillates in sign (w_{1,t} = 2 pi t J_1(t)) and is refused;
* q = 2 grows linearly, with w_{2,t} / t -> 4;
* q = 4 grows like (72 / pi) log t plus a constant;
* q = 3 and q >= 5 converge to finite limits.

Run:  python3 demos/berry_rates.py
"""

import math

import numpy as np

from setcov import berry_model, fit_rv_index, wq
from setcov.errors import NotRegularlyVaryingError
from setcov.experiments import berry_w4_log_slope

C = berry_model()
TS = np.array([10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0])


def main():
    table = {q: wq(C, 2, q, TS) for q in (1, 2, 3, 4, 5)}
    print(f"{'t':>7}" + "".join(f"{'w_' + str(q):>13}" for q in table))
    for i, t in enumerate(TS):
        print(f"{t:7.0f}" + "".join(f"{table[q][i]:13.5f}" for q in table))
    print()
    print("w_2 / t:       ", np.round(table[2] / TS, 4))
    slope = berry_w4_log_slope(50.0, 500.0)
    print(f"w_4 slope in log t over [50, 500]: {slope:.4f}  (72/pi = {72 / math.pi:.4f})")
    print("w_4 / log t:   ", np.round(table[4] / np.log(TS), 2),
          " <- the constant term makes this ratio drift slowly")
    ts = np.geomspace(10.0, 1000.0, 200)
    try:
        fit_rv_index(ts, wq(C, 2, 1, ts)).require_alpha()
    except NotRegularlyVaryingError as exc:
        print(f"q = 1 refused: {exc}")


if __name__ == "__main__":
    main()
