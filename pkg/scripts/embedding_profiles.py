"""Lorentz embedding of the Coulomb-plus-constant geometry.

For K < 1 the embedding stops at rho_min, where c dt/drho reaches zero; for
K >= 1 it is real down to rho = 0.

    python scripts/embedding_profiles.py --out results/embedding
"""

import argparse
from pathlib import Path

from geodual import __version__
from geodual.geometry import embedding_profile
from geodual.output import Table, write_csv, write_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="results/embedding")
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--N", type=int, default=3)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows, series = [], []
    for K in (0.25, 0.5, 0.9, 1.0, 2.0):
        prof = embedding_profile(K, args.kappa, args.N, rho_max=10.0, n=300, rho_lo=1e-4)
        print(f"K={K}: rho_min = {prof.rho_min}")
        rows += [[K, a, b, c, d] for a, b, c, d in zip(prof.rho_grid, prof.r_of_rho, prof.dr_drho, prof.cdt_drho)]
        series.append((f"K={K}", prof.rho_grid, prof.cdt_drho))
    meta = {"tool": "geodual", "version": __version__, "kappa": args.kappa, "N": args.N}
    write_csv(out / "embedding.csv", Table(["K", "rho", "r", "dr_drho", "cdt_drho"], rows, meta))
    write_svg(out / "cdt_drho.svg", series, title="timelike slope of the embedding", xlabel="rho", ylabel="c dt/drho")


if __name__ == "__main__":
    main()
