"""Numerov convergence on the square barrier.

Compares transmission and reflection amplitudes with plane-wave matching for
a sequence of step sizes and fits the convergence exponent.

    python scripts/barrier_convergence.py
"""

import argparse
import cmath
import math
import warnings

import numpy as np

from geodual.scattering import BelowBarrierWarning, Numerics, solve_scattering, square_barrier


def exact(U0, a, eps):
    k, q = math.sqrt(eps), cmath.sqrt(eps - U0)
    e = cmath.exp
    M = np.array([
        [e(1j * k * a), -e(1j * q * a), -e(-1j * q * a), 0],
        [1j * k * e(1j * k * a), -1j * q * e(1j * q * a), 1j * q * e(-1j * q * a), 0],
        [0, e(-1j * q * a), e(1j * q * a), -e(1j * k * a)],
        [0, 1j * q * e(-1j * q * a), -1j * q * e(1j * q * a), 1j * k * e(1j * k * a)],
    ])
    r, _, _, t = np.linalg.solve(M, [-e(-1j * k * a), 1j * k * e(-1j * k * a), 0, 0])
    return t, r


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--U0", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.5, 2.0, 8.0])
    args = ap.parse_args()
    warnings.simplefilter("ignore", BelowBarrierWarning)
    hs = np.array([0.04, 0.02, 0.01, 0.005, 0.0025])
    for eps in args.eps:
        t, r = exact(args.U0, args.a, eps)
        errs = []
        for h in hs:
            s = solve_scattering(square_barrier(args.U0, args.a), eps, Numerics(h, args.a + 4))
            errs.append(abs(s.t - t) + abs(s.r - r))
        slope = np.polyfit(np.log(hs[:4]), np.log(errs[:4]), 1)[0]
        print(f"eps={eps:g}: errors " + " ".join(f"{e:.2e}" for e in errs) + f"  exponent {slope:.3f}")


if __name__ == "__main__":
    main()
