"""``geodual`` command line.

    geodual p2g|g2p|embed|wormhole-potential|scatter|sweep --config run.json
            [--set key=value]... [--out DIR] [--format csv|json|svg]... [--jobs N]

The config is one JSON document; ``--set`` overrides scalar fields by dotted
path (``--set model.N=4``, ``--set scattering.epsilon=2.5``).  Exit codes: 0 ok,
1 config error, 2 numeric failure.  ``GEODUAL_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import (
    ComplexEmbeddingError,
    GeometryProfile,
    embedding_profile,
    potential_from_geometry,
    radius_from_superpotential,
)
from .output import Table, read_two_column_csv, write_csv, write_json, write_svg
from .riccati import (
    ModelParams,
    PotentialSpec,
    RiccatiBlowUp,
    ToleranceFailure,
    closed_form_coulomb_3d,
    closed_form_coulomb_plus_const,
    flat_seed,
    riccati_residual_profile,
    solve_modified_riccati,
)
from .scattering import (
    Numerics,
    ResolutionError,
    auto_numerics,
    ellis_potential,
    line_potential_from_geometry,
    phase_shift_sweep,
    solve_scattering,
    square_barrier,
    zero_potential,
)
from .specialfns import BracketError, ConvergenceError, DomainError, Tolerance

log = logging.getLogger("geodual")

COMMANDS = ("p2g", "g2p", "embed", "wormhole_potential", "scatter", "sweep")
FORMATS = ("csv", "json", "svg")

NUMERIC_ERRORS = (
    RiccatiBlowUp,
    ToleranceFailure,
    ConvergenceError,
    BracketError,
    ComplexEmbeddingError,
    ResolutionError,
    DomainError,
    ArithmeticError,
    np.linalg.LinAlgError,
)


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    start: float
    stop: float
    n: int = 201
    spacing: str = "log"

    def points(self) -> np.ndarray:
        if not self.n >= 2:
            raise ConfigError("grid.n must be >= 2")
        if not self.start < self.stop:
            raise ConfigError("grid.start must be < grid.stop")
        if self.spacing == "log":
            if self.start <= 0:
                raise ConfigError("log grid needs start > 0")
            return np.geomspace(self.start, self.stop, self.n)
        if self.spacing == "linear":
            return np.linspace(self.start, self.stop, self.n)
        raise ConfigError(f"grid.spacing must be 'log' or 'linear', got {self.spacing!r}")


@dataclass
class RunConfig:
    command: str
    model: ModelParams = field(default_factory=ModelParams)
    potential: dict = field(default_factory=dict)
    seed: dict = field(default_factory=lambda: {"kind": "flat"})
    geometry: dict = field(default_factory=dict)
    ells: list = field(default_factory=lambda: [0])
    grid: GridConfig | None = None
    embedding: dict = field(default_factory=dict)
    scattering: dict = field(default_factory=dict)
    tolerance: Tolerance = field(default_factory=lambda: Tolerance(1e-12, 1e-11, 2_000_000))
    formats: list = field(default_factory=lambda: ["csv"])
    out: str = "."
    stem: str | None = None
    jobs: int = 1

    @classmethod
    def from_dict(cls, d: dict, command: str) -> "RunConfig":
        known = {
            "command", "model", "potential", "seed", "geometry", "ells", "grid",
            "embedding", "scattering", "tolerance", "output", "jobs",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if d.get("command", command).replace("-", "_") != command:
            raise ConfigError(f"config is for {d['command']!r}, not {command!r}")
        try:
            model = ModelParams(**d.get("model", {}))
            tol = Tolerance(**{**dict(abs_tol=1e-12, rel_tol=1e-11, max_iter=2_000_000), **d.get("tolerance", {})})
            grid = GridConfig(**d["grid"]) if d.get("grid") else None
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        output = dict(d.get("output", {}))
        formats = output.pop("formats", ["csv"])
        if isinstance(formats, str):
            formats = [formats]
        bad = [f for f in formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown output formats {bad}")
        ells = d.get("ells", [model.ell])
        if not isinstance(ells, list) or not ells or any(int(e) != e or e < 0 for e in ells):
            raise ConfigError("ells must be a non-empty list of non-negative integers")
        return cls(
            command=command,
            model=model,
            potential=d.get("potential", {}),
            seed=d.get("seed", {"kind": "flat"}),
            geometry=d.get("geometry", {}),
            ells=[int(e) for e in ells],
            grid=grid,
            embedding=d.get("embedding", {}),
            scattering=d.get("scattering", {}),
            tolerance=tol,
            formats=list(formats),
            out=output.pop("dir", "."),
            stem=output.pop("stem", None),
            jobs=int(d.get("jobs", 1)),
        )

    def resolved(self) -> dict:
        """Full config with defaults filled in, as embedded in every output file."""
        d = {
            "command": self.command,
            "model": asdict(self.model),
            "ells": self.ells,
            "tolerance": asdict(self.tolerance),
            "output": {"formats": self.formats, "stem": self.stem or self.command},
        }
        for name in ("potential", "seed", "geometry", "embedding", "scattering"):
            if getattr(self, name):
                d[name] = getattr(self, name)
        if self.grid is not None:
            d["grid"] = asdict(self.grid)
        return d


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply ``key.path=value`` overrides; values parse as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        if isinstance(value, (dict, list)):
            raise ConfigError(f"--set only overrides scalar fields ({key})")
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot descend into {p!r} for {key!r}")
        node[parts[-1]] = value
    return cfg


# ---------------------------------------------------------------------------
# builders (config -> objects); failures here are config errors


def _table_from(sel: dict, xkey: str, ykey: str):
    if "file" in sel:
        return read_two_column_csv(sel["file"])
    if xkey in sel and ykey in sel:
        return sel[xkey], sel[ykey]
    raise ConfigError(f"tabulated selector needs '{xkey}' and '{ykey}' arrays or a 'file'")


def build_potential(sel: dict, model: ModelParams) -> PotentialSpec:
    kind = sel.get("kind")
    kappa = float(sel.get("kappa", model.kappa))
    if kind == "coulomb_plus_const":
        return PotentialSpec.coulomb_plus_const(kappa, model.N)
    if kind == "pure_coulomb":
        return PotentialSpec.pure_coulomb(kappa)
    if kind == "zero":
        return PotentialSpec.zero()
    if kind == "tabulated":
        r, U = _table_from(sel, "r", "U")
        return PotentialSpec.tabulated(r, U)
    raise ConfigError(f"unknown potential kind {kind!r}")


def build_seed(sel: dict, model: ModelParams, r_start: float) -> float:
    kind = sel.get("kind", "flat")
    if kind == "flat":
        return flat_seed(r_start, model.N)
    if kind == "coulomb_plus_const":
        return float(closed_form_coulomb_plus_const(r_start, model))
    if kind == "coulomb_3d":
        return float(closed_form_coulomb_3d(r_start, float(sel.get("kappa", model.kappa))))
    if kind == "value":
        return float(sel["W"])
    raise ConfigError(f"unknown seed kind {kind!r}")


def build_geometry(sel: dict, model: ModelParams) -> GeometryProfile:
    kind = sel.get("kind")
    if kind == "flat":
        return GeometryProfile.flat()
    if kind == "closed_form_coulomb":
        N = int(sel.get("N", model.N))
        kappa = float(sel.get("kappa", model.kappa))
        K = float(sel["K"]) if "K" in sel else GeometryProfile.coulomb_K(model.R0, model.r0, kappa, N)
        return GeometryProfile.closed_form_coulomb(K, kappa, N)
    if kind == "ellis":
        return GeometryProfile.ellis(float(sel.get("R0", model.R0)))
    if kind == "tabulated":
        r, R = _table_from(sel, "r", "R")
        return GeometryProfile.tabulated(r, R)
    raise ConfigError(f"unknown geometry kind {kind!r}")


def build_line_potential(sel: dict, model: ModelParams, ell: int):
    kind = sel.get("kind", "ellis")
    if kind == "ellis":
        return ellis_potential(model.N, ell, float(sel.get("R0", model.R0)))
    if kind == "square_barrier":
        return square_barrier(float(sel["U0"]), float(sel["a"]))
    if kind == "zero":
        return zero_potential()
    if kind == "tabulated_geometry":
        w, R = _table_from(sel, "w", "R")
        return line_potential_from_geometry(GeometryProfile.tabulated(w, R), model.N, ell)
    raise ConfigError(f"unknown line potential kind {kind!r}")


def _numerics_for(sc: dict):
    h = sc.get("h")
    w_max = sc.get("w_max")
    kh = float(sc.get("kh", 0.05))

    def pick(U, eps):
        auto = auto_numerics(U, eps, kh=kh)
        return Numerics(h=float(h) if h else auto.h, w_max=float(w_max) if w_max else auto.w_max)

    return pick


# ---------------------------------------------------------------------------
# commands


def _meta(cfg: RunConfig, **extra) -> dict:
    meta = {"tool": "geodual", "version": __version__, "command": cfg.command, "config": cfg.resolved()}
    meta.update(extra)
    return meta


def run_p2g(cfg: RunConfig):
    if cfg.grid is None:
        raise ConfigError("p2g needs a grid {start, stop, n}")
    r = cfg.grid.points()
    U = build_potential(cfg.potential, cfg.model)
    W0 = build_seed(cfg.seed, cfg.model, float(r[0]))

    def compute():
        sol = solve_modified_riccati(U, cfg.model, (float(r[0]), float(r[-1])), W0, cfg.tolerance, r_eval=r)
        geo = radius_from_superpotential(sol)
        res = riccati_residual_profile(sol, U)
        rows = list(zip(sol.r_grid, sol.W_values, sol.S_values, geo.R_values, res))
        table = Table(["r", "W", "S", "R", "residual"], rows, _meta(cfg, W_start=W0, max_residual=sol.max_residual))
        plot = [("R(r)", sol.r_grid, geo.R_values)]
        return table, plot, dict(title="metric radius", xlabel="r", ylabel="R")

    return compute


def run_g2p(cfg: RunConfig):
    g = build_geometry(cfg.geometry, cfg.model)
    if g.kind == "tabulated":
        r = g.r_grid
    elif cfg.grid is None:
        raise ConfigError("g2p with a closed-form geometry needs a grid")
    else:
        r = cfg.grid.points()

    def compute():
        R = g.R_values if g.kind == "tabulated" else g.radius(r)
        cols = ["r", "R"]
        data = [r, R]
        plot = []
        for ell in cfg.ells:
            U = potential_from_geometry(g, cfg.model.N, ell)
            Uv = U.u_table if U.kind == "tabulated" else np.asarray(U(r), dtype=float)
            cols.append(f"U_ell{ell}")
            data.append(Uv)
            plot.append((f"ell={ell}", r, Uv))
        table = Table(cols, list(zip(*data)), _meta(cfg, geometry=g.describe()))
        return table, plot, dict(title="flat-space potential", xlabel="r", ylabel="U")

    return compute


def run_embed(cfg: RunConfig):
    e = dict(cfg.embedding)
    N = int(e.get("N", cfg.model.N))
    kappa = float(e.get("kappa", cfg.model.kappa))
    K = float(e["K"]) if "K" in e else GeometryProfile.coulomb_K(cfg.model.R0, cfg.model.r0, kappa, N)
    try:
        rho_max = float(e["rho_max"])
    except KeyError as exc:
        raise ConfigError("embedding.rho_max is required") from exc
    n = int(e.get("n", 200))
    rho_lo = e.get("rho_lo")

    def compute():
        prof = embedding_profile(K, kappa, N, rho_max, n, rho_lo=None if rho_lo is None else float(rho_lo))
        extra = {"K": K, "kappa": kappa, "N": N}
        if prof.rho_min is not None:
            extra["rho_min"] = prof.rho_min
        rows = list(zip(prof.rho_grid, prof.r_of_rho, prof.dr_drho, prof.cdt_drho))
        table = Table(["rho", "r", "dr_drho", "cdt_drho"], rows, _meta(cfg, **extra))
        plot = [("dr/drho", prof.rho_grid, prof.dr_drho), ("c dt/drho", prof.rho_grid, prof.cdt_drho)]
        return table, plot, dict(title="Lorentz embedding", xlabel="rho", ylabel="slope")

    return compute


def run_wormhole_potential(cfg: RunConfig):
    if cfg.grid is None:
        raise ConfigError("wormhole_potential needs a grid over w")
    w = cfg.grid.points()
    g = build_geometry(cfg.geometry or {"kind": "ellis"}, cfg.model)
    if g.kind == "closed_form_coulomb":
        raise ConfigError("wormhole_potential needs an ellis or tabulated geometry")

    def compute():
        cols = ["w", "R"]
        data = [w, g.radius(w)]
        plot = []
        for ell in cfg.ells:
            U = line_potential_from_geometry(g, cfg.model.N, ell)
            Uv = np.asarray(U(w), dtype=float)
            cols.append(f"U_ell{ell}")
            data.append(Uv)
            plot.append((f"ell={ell}", w, Uv))
        table = Table(cols, list(zip(*data)), _meta(cfg, geometry=g.describe()))
        return table, plot, dict(title="wormhole line potential", xlabel="w", ylabel="U")

    return compute


def run_scatter(cfg: RunConfig):
    sc = cfg.scattering
    if "epsilon" not in sc:
        raise ConfigError("scattering.epsilon is required")
    eps = float(sc["epsilon"])
    sel = sc.get("potential", {"kind": "ellis"})
    pots = [(ell, build_line_potential(sel, cfg.model, ell)) for ell in cfg.ells]
    pick = _numerics_for(sc)

    def compute():
        rows = []
        for ell, U in pots:
            a = solve_scattering(U, eps, pick(U, eps))
            rows.append(
                [ell, a.epsilon, a.k, a.t.real, a.t.imag, a.r.real, a.r.imag, a.transmission, a.reflection, a.flux_defect]
            )
        cols = ["ell", "epsilon", "k", "re_t", "im_t", "re_r", "im_r", "abs_t2", "abs_r2", "flux_defect"]
        table = Table(cols, rows, _meta(cfg))
        plot = [(f"ell={row[0]}", [0.0, row[7]], [0.0, row[8]]) for row in rows]
        return table, plot, dict(title="|t|^2 vs |r|^2", xlabel="|t|^2", ylabel="|r|^2")

    return compute


def run_sweep(cfg: RunConfig):
    sc = cfg.scattering
    if "energies" in sc:
        eps = np.asarray(sc["energies"], dtype=float)
    else:
        try:
            eps = np.geomspace(float(sc["eps_min"]), float(sc["eps_max"]), int(sc.get("n", 50)))
        except KeyError as exc:
            raise ConfigError("sweep needs scattering.energies or eps_min/eps_max") from exc
    sel = sc.get("potential", {"kind": "ellis"})
    pots = [(ell, build_line_potential(sel, cfg.model, ell)) for ell in cfg.ells]
    pick = _numerics_for(sc)

    def compute():
        rows = []
        plot = []
        for ell, U in pots:
            rec = phase_shift_sweep(U, eps, lambda e, U=U: pick(U, e), jobs=cfg.jobs)
            for i, a in enumerate(rec.amplitudes):
                rows.append(
                    [ell, a.epsilon, a.k, a.transmission, a.reflection, a.flux_defect,
                     rec.eta[i], rec.delta[i], rec.argand[i].real, rec.argand[i].imag]
                )
            plot.append((f"ell={ell}", rec.argand.real, rec.argand.imag))
        cols = ["ell", "epsilon", "k", "abs_t2", "abs_r2", "flux_defect", "eta", "delta", "argand_x", "argand_y"]
        table = Table(cols, rows, _meta(cfg))
        style = dict(title="Argand diagram", xlabel="Re", ylabel="Im", equal_aspect=True, circle=(0.0, 0.5, 0.5))
        return table, plot, style

    return compute


RUNNERS = {
    "p2g": run_p2g,
    "g2p": run_g2p,
    "embed": run_embed,
    "wormhole_potential": run_wormhole_potential,
    "scatter": run_scatter,
    "sweep": run_sweep,
}


def write_outputs(cfg: RunConfig, table: Table, plot, style: dict) -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.stem or cfg.command
    paths = []
    for f in cfg.formats:
        path = out / f"{stem}.{f}"
        if f == "csv":
            write_csv(path, table)
        elif f == "json":
            write_json(path, table)
        else:
            write_svg(path, plot, **style)
        paths.append(path)
    return paths


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geodual", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"geodual {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name.replace("_", "-"), aliases=[name] if "_" in name else [])
        s.add_argument("--config", required=True, help="JSON config file")
        s.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        s.add_argument("--out", help="output directory")
        s.add_argument("--format", dest="formats", action="append", choices=FORMATS)
        s.add_argument("--jobs", type=int, help="parallel energies for sweep")
    return p


def _setup_logging():
    level = os.environ.get("GEODUAL_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    if level not in levels:
        log.warning("unknown GEODUAL_LOG=%r, using warn", level)


def _report_warnings(caught) -> None:
    """One log line per warning category; details at debug level."""
    by_kind: dict[str, list[str]] = {}
    for w in caught:
        by_kind.setdefault(w.category.__name__, []).append(str(w.message))
    for kind, msgs in sorted(by_kind.items()):
        more = f" (+{len(msgs) - 1} similar)" if len(msgs) > 1 else ""
        log.warning("%s: %s%s", kind, msgs[0], more)
        for m in msgs[1:]:
            log.debug("%s: %s", kind, m)


def main(argv=None) -> int:
    _setup_logging()
    args = _parser().parse_args(argv)
    command = args.command.replace("-", "_")
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw = apply_overrides(raw, args.overrides)
        cfg = RunConfig.from_dict(raw, command)
        if args.out:
            cfg.out = args.out
        if args.formats:
            cfg.formats = args.formats
        if args.jobs:
            cfg.jobs = args.jobs
        compute = RUNNERS[command](cfg)
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        log.error("config error: %s", exc)
        return 1
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            table, plot, style = compute()
    except NUMERIC_ERRORS as exc:
        log.error("numeric failure: %s", exc)
        return 2
    _report_warnings(caught)
    for path in write_outputs(cfg, table, plot, style):
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
