"""Potential -> superpotential: the modified Riccati equation.

For a radial potential ``U(r)`` in ``N`` flat dimensions and angular
momentum ``ell``, the superpotential ``W = (N-1)/2 d(ln R)/dr`` of the
equivalent curved geometry solves

    W' + W**2 + ell(ell+N-2)/R0**2 * exp(4 S/(1-N)) = U + c_ell / r**2,
    S(r) = integral of W from r0 to r,
    c_ell = (ell + (N-1)/2) (ell + (N-3)/2).

The memory term is handled by carrying ``S`` as a second state variable,
``S' = W``, which turns the integro-differential equation into an ordinary
first-order system integrated here with an adaptive Dormand-Prince 5(4) pair.
For ``ell = 0`` the memory term drops out and this is an ordinary Riccati
equation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .specialfns import DomainError, Tolerance, bessel_i_scaled

__all__ = [
    "ModelParams",
    "PotentialSpec",
    "SuperpotentialSolution",
    "RiccatiBlowUp",
    "ToleranceFailure",
    "SOLVER_TOL",
    "centrifugal_coefficient",
    "riccati_terms",
    "riccati_rhs",
    "solve_modified_riccati",
    "flat_seed",
    "closed_form_coulomb_plus_const",
    "closed_form_coulomb_plus_const_derivative",
    "closed_form_coulomb_3d",
    "closed_form_coulomb_3d_derivative",
    "grid_derivative",
    "riccati_residual_profile",
    "riccati_residual",
]

log = logging.getLogger(__name__)

SOLVER_TOL = Tolerance(abs_tol=1e-12, rel_tol=1e-11, max_iter=2_000_000)

# below this value of kappa*r the Bessel-ratio solution is replaced by its series
_COULOMB_3D_SERIES_MAX = 1e-8


class RiccatiBlowUp(RuntimeError):
    """The superpotential ran into a pole of the Riccati solution."""

    def __init__(self, r_pole: float, W: float):
        self.r_pole = r_pole
        self.W = W
        super().__init__(f"Riccati solution blows up near r = {r_pole:.12g} (W = {W:.6g})")


class ToleranceFailure(RuntimeError):
    """The adaptive integrator could not meet the requested tolerance."""


@dataclass(frozen=True)
class ModelParams:
    """Dimension, angular momentum and normalisation of the effective geometry.

    ``R0`` is the metric radius at the reference radius ``r0``.  ``kappa`` is
    only used by the closed-form Coulomb solutions.  In two dimensions
    ``ell`` plays the role of ``|m|``.
    """

    N: int = 3
    ell: int = 0
    R0: float = 1.0
    r0: float = 1.0
    kappa: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if int(self.ell) != self.ell or self.ell < 0:
            raise ValueError(f"ell must be a non-negative integer, got {self.ell}")
        if not self.R0 > 0:
            raise ValueError(f"R0 must be positive, got {self.R0}")
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")


_POTENTIAL_KINDS = ("coulomb_plus_const", "pure_coulomb", "tabulated", "closed_form")


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A radial potential ``U(r)`` in units of inverse length squared.

    Use the constructors rather than filling the fields by hand::

        PotentialSpec.coulomb_plus_const(kappa=1.0, N=3)   # kappa/r + kappa^2/(N-1)^2
        PotentialSpec.pure_coulomb(kappa=1.0)              # kappa/r
        PotentialSpec.tabulated(r, U)                      # monotone cubic interpolation
        PotentialSpec.closed_form(func, name="...")
    """

    kind: str
    kappa: float = 0.0
    dims: int | None = None
    r_table: np.ndarray | None = None
    u_table: np.ndarray | None = None
    func: Callable | None = None
    name: str = ""
    # per-sample flag for tabulated values of reduced accuracy (edge stencils)
    low_confidence: np.ndarray | None = None
    _interp: Callable | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in _POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "coulomb_plus_const" and (self.dims is None or self.dims < 2):
            raise ValueError("coulomb_plus_const needs dims >= 2 for its constant kappa^2/(N-1)^2")
        if self.kind == "closed_form" and not callable(self.func):
            raise ValueError("closed_form potential needs a callable")
        if self.kind == "tabulated":
            r = np.asarray(self.r_table, dtype=float)
            u = np.asarray(self.u_table, dtype=float)
            if r.ndim != 1 or r.shape != u.shape:
                raise ValueError("tabulated potential needs 1-d r and U of equal length")
            if r.size < 8:
                raise ValueError(f"tabulated potential needs >= 8 points, got {r.size}")
            if np.any(np.diff(r) <= 0):
                raise ValueError("tabulated r grid must be strictly increasing")
            if not np.all(np.isfinite(u)):
                raise ValueError("tabulated U values must be finite")
            object.__setattr__(self, "r_table", r)
            object.__setattr__(self, "u_table", u)
            object.__setattr__(self, "_interp", PchipInterpolator(r, u, extrapolate=False))

    @classmethod
    def coulomb_plus_const(cls, kappa: float, N: int) -> "PotentialSpec":
        return cls("coulomb_plus_const", kappa=float(kappa), dims=int(N))

    @classmethod
    def pure_coulomb(cls, kappa: float) -> "PotentialSpec":
        return cls("pure_coulomb", kappa=float(kappa))

    @classmethod
    def tabulated(cls, r, U, low_confidence=None) -> "PotentialSpec":
        return cls("tabulated", r_table=r, u_table=U, low_confidence=low_confidence)

    @classmethod
    def closed_form(cls, func: Callable, name: str = "") -> "PotentialSpec":
        return cls("closed_form", func=func, name=name)

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls("pure_coulomb", kappa=0.0)

    @property
    def domain(self) -> tuple[float, float]:
        if self.kind == "tabulated":
            return float(self.r_table[0]), float(self.r_table[-1])
        return 0.0, math.inf

    def __call__(self, r):
        if self.kind == "coulomb_plus_const":
            return self.kappa / r + self.kappa**2 / (self.dims - 1) ** 2
        if self.kind == "pure_coulomb":
            return self.kappa / r
        if self.kind == "closed_form":
            return self.func(r)
        lo, hi = self.domain
        if np.any(np.asarray(r) < lo) or np.any(np.asarray(r) > hi):
            raise DomainError(f"r outside tabulated range [{lo}, {hi}]")
        out = self._interp(r)
        return float(out) if np.ndim(out) == 0 else out

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("coulomb_plus_const", "pure_coulomb"):
            d["kappa"] = self.kappa
        if self.dims is not None:
            d["dims"] = self.dims
        if self.kind == "tabulated":
            d["n_points"] = int(self.r_table.size)
            d["range"] = list(self.domain)
        if self.name:
            d["name"] = self.name
        return d


@dataclass
class SuperpotentialSolution:
    r_grid: np.ndarray
    W_values: np.ndarray
    S_values: np.ndarray
    params: ModelParams
    max_residual: float = math.nan
    n_steps: int = 0
    n_rejected: int = 0

    def __post_init__(self):
        self.r_grid = np.asarray(self.r_grid, dtype=float)
        self.W_values = np.asarray(self.W_values, dtype=float)
        self.S_values = np.asarray(self.S_values, dtype=float)
        if not (self.r_grid.shape == self.W_values.shape == self.S_values.shape):
            raise ValueError("r_grid, W_values and S_values must share one shape")


def centrifugal_coefficient(N: int, ell: int) -> float:
    """``(ell + (N-1)/2)(ell + (N-3)/2)``; equals ``m**2 - 1/4`` in 2D and 0 for the 3D s-wave."""
    return (ell + 0.5 * (N - 1)) * (ell + 0.5 * (N - 3))


def riccati_terms(r: float, W: float, S: float, U_at_r: float, p: ModelParams):
    """The four pieces of ``dW/dr``: ``(U, c_ell/r^2, -W^2, -geometry)``.

    Kept separate so the 2D specialisation can be checked term by term.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r!r}")
    N, ell = p.N, p.ell
    centrifugal = centrifugal_coefficient(N, ell) / (r * r)
    if ell:
        geometry = ell * (ell + N - 2) / (p.R0 * p.R0) * math.exp(4.0 * S / (1 - N))
    else:
        geometry = 0.0
    return U_at_r, centrifugal, -W * W, -geometry


def riccati_rhs(r: float, W: float, S: float, U_at_r: float, p: ModelParams) -> float:
    """``dW/dr`` of the modified Riccati system (``dS/dr = W`` is implicit)."""
    u, c, w2, g = riccati_terms(r, W, S, U_at_r, p)
    return u + c + w2 + g


def flat_seed(r_start: float, N: int) -> float:
    """``W = (N-1)/(2 r)``, the superpotential of flat space (``R = r``)."""
    return (N - 1) / (2.0 * r_start)


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def _dp54(rhs, x0: float, y0, targets: Sequence[float], tol: Tolerance, guard: float, h0: float):
    """Integrate ``y' = rhs(x, y)`` (2-component) and return ``y`` at each target.

    ``targets`` must be monotone in the direction of integration; every target
    is landed on exactly by shortening the step.  Returns ``(ys, n_acc, n_rej)``.
    """
    direction = 1.0 if targets[-1] >= x0 else -1.0
    x = float(x0)
    y0_, y1_ = float(y0[0]), float(y0[1])
    out = []
    h = abs(h0)
    n_acc = n_rej = 0
    k1 = rhs(x, y0_, y1_)
    atol, rtol = tol.abs_tol, tol.rel_tol
    for target in targets:
        while direction * (target - x) > 0:
            if n_acc + n_rej >= tol.max_iter:
                raise ToleranceFailure(f"step budget {tol.max_iter} exhausted at x = {x:.12g}")
            remaining = abs(target - x)
            last = h >= remaining
            step = remaining if last else h
            hs = direction * step
            ks = [k1]
            for i in range(1, 7):
                a = _A[i]
                ya = y0_ + hs * sum(a[j] * ks[j][0] for j in range(i))
                yb = y1_ + hs * sum(a[j] * ks[j][1] for j in range(i))
                ks.append(rhs(x + _C[i] * hs, ya, yb))
            # ks[6] was evaluated at the 5th-order solution (FSAL)
            n0, n1 = ya, yb
            e0 = hs * sum(_E[j] * ks[j][0] for j in range(7))
            e1 = hs * sum(_E[j] * ks[j][1] for j in range(7))
            sc0 = atol + rtol * max(abs(y0_), abs(n0))
            sc1 = atol + rtol * max(abs(y1_), abs(n1))
            err = max(abs(e0) / sc0, abs(e1) / sc1)
            if not math.isfinite(err):
                err = math.inf
            if err <= 1.0:
                x = target if last else x + hs
                y0_, y1_ = n0, n1
                k1 = ks[6]
                n_acc += 1
                if abs(y0_) > guard:
                    raise RiccatiBlowUp(x, y0_)
                fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err**-0.2))
                if not last:
                    h = step * fac
                elif fac < 1.0:
                    h = min(h, step * fac)
            else:
                n_rej += 1
                h = step * max(0.1, 0.9 * err**-0.2)
                if h < 1e-14 * max(1.0, abs(x)):
                    if abs(y0_) * abs(x) > 1e6:
                        raise RiccatiBlowUp(x, y0_)
                    raise ToleranceFailure(f"step size underflow at x = {x:.12g}")
        out.append((y0_, y1_))
    return out, n_acc, n_rej


def _shoot_initial_S(rhs, r_start, W_start, r0, tol, guard, h0):
    """``S(r_start)`` such that the trajectory has ``S(r0) = 0``.

    For ``ell > 0`` the memory term depends on ``S`` itself, so a constant
    shift after the fact would change the equation.  ``S(r0)`` is a smooth
    function of the start value; secant iteration converges in one step for
    ``ell = 0`` and in a few otherwise.
    """
    if r0 == r_start:
        return 0.0, 0, 0
    n_acc = n_rej = 0

    def S_at_r0(sigma):
        nonlocal n_acc, n_rej
        (y,), a, r = _dp54(rhs, r_start, (W_start, sigma), [r0], tol, guard, h0)
        n_acc, n_rej = n_acc + a, n_rej + r
        return y[1]

    def safe(sigma, fallback):
        # back off toward a start value whose trajectory survived to r0
        for _ in range(60):
            try:
                return sigma, S_at_r0(sigma)
            except RiccatiBlowUp:
                sigma = 0.5 * (sigma + fallback)
        raise ToleranceFailure(f"every trial start value for S runs into a pole before r0 = {r0}")

    # power-law guess R ~ r^(2 W r/(N-1)), exact for flat space
    s0, f0 = safe(W_start * r_start * math.log(r_start / r0), 0.0)
    s1, f1 = safe(s0 - f0, s0)
    best = min((abs(f0), s0), (abs(f1), s1))
    stalled = 0
    for _ in range(60):
        # S(r0) itself is only known to the integration tolerance; different
        # trial values take different step sequences, so stop at that noise floor
        if abs(f1) <= 1e-3 * (tol.abs_tol + tol.rel_tol * abs(s1)) or f1 == f0 or stalled >= 3:
            break
        s0, f0, (s1, f1) = s1, f1, safe(s1 - f1 * (s1 - s0) / (f1 - f0), s1)
        stalled = stalled + 1 if abs(f1) >= best[0] else 0
        best = min(best, (abs(f1), s1))
    if best[0] <= 1e-6 * max(1.0, abs(best[1])):
        return best[1], n_acc, n_rej
    raise ToleranceFailure(f"could not place S(r0) = 0 (r0 = {r0}); best offset {best[0]:.3g}")


def solve_modified_riccati(
    U: PotentialSpec,
    p: ModelParams,
    span: tuple[float, float],
    W_start: float,
    tol: Tolerance = SOLVER_TOL,
    r_eval: np.ndarray | None = None,
    n_out: int = 1001,
    overflow_guard: float = 1e12,
) -> SuperpotentialSolution:
    """Integrate the modified Riccati system from ``span[0]`` with ``W(span[0]) = W_start``.

    The Riccati solutions form a one-parameter family, so the seed selects the
    geometry.  Common seeds are :func:`flat_seed` and the closed forms.

    Parameters
    ----------
    r_eval
        Output radii inside ``span``.  Defaults to ``n_out`` log-spaced points.
        The integrator lands on every output radius exactly.
    overflow_guard
        ``|W|`` above this is reported as a pole via :class:`RiccatiBlowUp`.

    Returns
    -------
    SuperpotentialSolution
        ``S(r0) = 0`` (``r0`` need not lie in ``span``); the start value of
        ``S`` is found by shooting because the memory term depends on ``S``
        itself.  ``max_residual`` is computed by re-substitution on the
        output grid.
    """
    r_start, r_end = float(span[0]), float(span[1])
    if not 0 < r_start < r_end:
        raise DomainError(f"need 0 < r_start < r_end, got {span}")
    if not math.isfinite(W_start):
        raise ValueError("W_start must be finite")
    if r_eval is None:
        r_eval = np.geomspace(r_start, r_end, n_out)
    r_eval = np.asarray(r_eval, dtype=float)
    if r_eval.ndim != 1 or r_eval.size < 1 or np.any(np.diff(r_eval) <= 0):
        raise ValueError("r_eval must be a strictly increasing 1-d array")
    if r_eval[0] < r_start or r_eval[-1] > r_end:
        raise ValueError("r_eval must lie inside span")

    def rhs(r, W, S):
        return riccati_rhs(r, W, S, U(r), p), W

    forward = sorted(set(r_eval.tolist()) | {r_end} | ({p.r0} if r_start < p.r0 <= r_end else set()))
    forward = [x for x in forward if x > r_start]
    h0 = 1e-3 * r_start
    sigma, n_acc, n_rej = _shoot_initial_S(rhs, r_start, W_start, p.r0, tol, overflow_guard, h0)
    ys, a1, r1 = _dp54(rhs, r_start, (W_start, sigma), forward, tol, overflow_guard, h0)
    n_acc, n_rej = n_acc + a1, n_rej + r1
    table = dict(zip(forward, ys))
    table[r_start] = (W_start, sigma)
    # remove the last rounding-level offset when r0 is on the output grid
    S_ref = table[p.r0][1] if p.r0 in table else 0.0

    W_vals = np.array([table[x][0] for x in r_eval.tolist()])
    S_vals = np.array([table[x][1] for x in r_eval.tolist()]) - S_ref
    sol = SuperpotentialSolution(r_eval, W_vals, S_vals, p, n_steps=n_acc, n_rejected=n_rej)
    if r_eval.size >= 3:
        sol.max_residual = riccati_residual(sol, U)
    log.debug("riccati solve: %d accepted, %d rejected steps, residual %.3g", n_acc, n_rej, sol.max_residual)
    return sol


def closed_form_coulomb_plus_const(r, p: ModelParams):
    """``W = (N-1)/(2r) + kappa/(N-1)``, exact for ``U = kappa/r + kappa^2/(N-1)^2`` at ``ell = 0``."""
    r = np.asarray(r, dtype=float) if np.ndim(r) else float(r)
    if np.any(np.asarray(r) <= 0):
        raise DomainError("r must be positive")
    return (p.N - 1) / (2.0 * r) + p.kappa / (p.N - 1)


def closed_form_coulomb_plus_const_derivative(r, p: ModelParams):
    if np.any(np.asarray(r) <= 0):
        raise DomainError("r must be positive")
    return -(p.N - 1) / (2.0 * np.asarray(r, dtype=float) ** 2)


def _coulomb_3d_scalar(r: float, kappa: float) -> float:
    if kappa * r < _COULOMB_3D_SERIES_MAX:
        return 1.0 / r + kappa / 2.0 - kappa * kappa * r / 12.0
    x = 2.0 * math.sqrt(kappa * r)
    return math.sqrt(kappa / r) * bessel_i_scaled(0, x) / bessel_i_scaled(1, x)


def _coulomb_3d_derivative_scalar(r: float, kappa: float) -> float:
    if kappa * r < _COULOMB_3D_SERIES_MAX:
        return -1.0 / (r * r) - kappa * kappa / 12.0
    x = 2.0 * math.sqrt(kappa * r)
    ratio = bessel_i_scaled(0, x) / bessel_i_scaled(1, x)
    # I0' = I1, I1' = I0 - I1/x  =>  (I0/I1)' = 1 - ratio^2 + ratio/x ;  dx/dr = sqrt(kappa/r)
    dratio_dx = 1.0 - ratio * ratio + ratio / x
    root = math.sqrt(kappa / r)
    return -0.5 * root / r * ratio + root * root * dratio_dx


def _check_coulomb_3d(r, kappa):
    if not kappa > 0:
        raise DomainError(f"closed_form_coulomb_3d needs kappa > 0, got {kappa!r}")
    if np.any(np.asarray(r) <= 0):
        raise DomainError("r must be positive")


def closed_form_coulomb_3d(r, kappa: float):
    """``sqrt(kappa/r) I0(2 sqrt(kappa r)) / I1(2 sqrt(kappa r))``: solves ``W' + W^2 = kappa/r`` in 3D.

    For ``kappa*r < 1e-8`` the small-``r`` series ``1/r + kappa/2 - kappa^2 r/12``
    is returned instead.
    """
    _check_coulomb_3d(r, kappa)
    if np.ndim(r) == 0:
        return _coulomb_3d_scalar(float(r), kappa)
    return np.array([_coulomb_3d_scalar(float(x), kappa) for x in np.ravel(r)]).reshape(np.shape(r))


def closed_form_coulomb_3d_derivative(r, kappa: float):
    """Analytic ``dW/dr`` of :func:`closed_form_coulomb_3d` via the chain rule on I0, I1."""
    _check_coulomb_3d(r, kappa)
    if np.ndim(r) == 0:
        return _coulomb_3d_derivative_scalar(float(r), kappa)
    return np.array([_coulomb_3d_derivative_scalar(float(x), kappa) for x in np.ravel(r)]).reshape(
        np.shape(r)
    )


def _uniform(x: np.ndarray) -> bool:
    d = np.diff(x)
    return bool(np.all(np.abs(d - d.mean()) <= 1e-9 * abs(d.mean())))


def _central_diff(y: np.ndarray, dx: float) -> np.ndarray:
    # fourth order in the interior, second order on the rows next to the edges
    d = np.gradient(y, dx, edge_order=2)
    if y.size >= 5:
        d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * dx)
    return d


def grid_derivative(r: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Central-difference ``dy/dr`` on uniform, log-uniform or arbitrary grids.

    Uniform and log-uniform grids get a 5-point (fourth order) interior
    stencil; anything else falls back to ``numpy.gradient``.
    """
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    if r.size < 3:
        raise ValueError("need at least 3 grid points")
    if _uniform(r):
        return _central_diff(y, r[1] - r[0])
    if r[0] > 0:
        x = np.log(r)
        if _uniform(x):
            return _central_diff(y, x[1] - x[0]) / r
    return np.gradient(y, r, edge_order=2)


def riccati_residual_profile(sol: SuperpotentialSolution, U: PotentialSpec) -> np.ndarray:
    """Pointwise defect ``W' + W^2 + geometry - U - c_ell/r^2`` with ``W'`` from finite differences."""
    r, W, S = sol.r_grid, sol.W_values, sol.S_values
    if r.size == 0:
        raise ValueError("empty solution")
    p = sol.params
    dW = grid_derivative(r, W)
    geom = p.ell * (p.ell + p.N - 2) / p.R0**2 * np.exp(4.0 * S / (1 - p.N)) if p.ell else 0.0
    Uv = np.asarray(U(r), dtype=float) * np.ones_like(r)
    return dW + W * W + geom - Uv - centrifugal_coefficient(p.N, p.ell) / (r * r)


def riccati_residual(sol: SuperpotentialSolution, U: PotentialSpec) -> float:
    """Largest ``|defect|`` over interior grid points (two points trimmed at each end)."""
    res = np.abs(riccati_residual_profile(sol, U))
    trim = 2 if res.size >= 5 else 1 if res.size >= 3 else 0
    inner = res[trim : res.size - trim] if trim else res
    return float(np.max(inner)) if inner.size else 0.0
