"""Coulomb potential -> geometry and back.

Solves the modified Riccati equation for U = kappa/r + kappa^2/(N-1)^2 and for
the pure 3D Coulomb potential, compares with the closed forms, reconstructs
R(r), and inverts R back to a potential for several angular momenta.

    python scripts/coulomb_duality.py --out results/coulomb
"""

import argparse
from pathlib import Path

import numpy as np

from geodual import __version__
from geodual.geometry import GeometryProfile, potential_from_geometry, radius_from_superpotential
from geodual.output import Table, write_csv, write_svg
from geodual.riccati import (
    ModelParams,
    PotentialSpec,
    closed_form_coulomb_3d,
    closed_form_coulomb_plus_const,
    solve_modified_riccati,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="results/coulomb")
    ap.add_argument("--kappa", type=float, default=1.0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kappa = args.kappa
    r = np.geomspace(0.05, 10, 400)

    rows, series = [], []
    for N in (2, 3, 4, 6):
        p = ModelParams(N=N, kappa=kappa)
        U = PotentialSpec.coulomb_plus_const(kappa, N)
        sol = solve_modified_riccati(U, p, (r[0], r[-1]), closed_form_coulomb_plus_const(r[0], p), r_eval=r)
        err = np.abs(sol.W_values / closed_form_coulomb_plus_const(r, p) - 1)
        R = radius_from_superpotential(sol).R_values
        rows += [[N, x, w, e, rr] for x, w, e, rr in zip(r, sol.W_values, err, R)]
        series.append((f"N={N}", r, R))
        print(f"N={N}: max rel err in W {err.max():.2e}, residual {sol.max_residual:.2e}")
    meta = {"tool": "geodual", "version": __version__, "kappa": kappa, "potential": "kappa/r + kappa^2/(N-1)^2"}
    write_csv(out / "coulomb_plus_const.csv", Table(["N", "r", "W", "rel_err", "R"], rows, meta))
    write_svg(out / "coulomb_plus_const_R.svg", series, title="metric radius for Coulomb plus constant", xlabel="r", ylabel="R")

    p = ModelParams(N=3, kappa=kappa)
    sol = solve_modified_riccati(PotentialSpec.pure_coulomb(kappa), p, (r[0], r[-1]), closed_form_coulomb_3d(r[0], kappa), r_eval=r)
    exact = closed_form_coulomb_3d(r, kappa)
    print(f"pure Coulomb (N=3): max rel err {np.max(np.abs(sol.W_values / exact - 1)):.2e}")
    write_csv(
        out / "coulomb_3d.csv",
        Table(["r", "W", "W_bessel"], list(zip(r, sol.W_values, exact)), {**meta, "potential": "kappa/r"}),
    )

    g = GeometryProfile.coulomb_K(1.0, 1.0, kappa, 3)
    geo = GeometryProfile.closed_form_coulomb(g, kappa, 3)
    series = [(f"ell={ell}", r, potential_from_geometry(geo, 3, ell)(r)) for ell in range(4)]
    write_svg(out / "potential_by_ell.svg", series, title="flat-space potential of the Coulomb geometry", xlabel="r", ylabel="U")


if __name__ == "__main__":
    main()
