"""Geometry side of the duality.

* superpotential -> metric radius ``R(r) = R0 exp(2 S/(N-1))``;
* metric radius -> flat-space potential for a given angular momentum;
* isotropic coordinates and the Lorentz embedding of the Coulomb-plus-constant
  geometry ``R = K r exp(2 kappa r/(N-1)^2)``;
* the Ellis wormhole radius ``R(w) = sqrt(R0^2 + w^2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .riccati import PotentialSpec, SuperpotentialSolution, centrifugal_coefficient
from .specialfns import BracketError, DomainError, Tolerance, find_root_bracketed, lambert_w0

__all__ = [
    "GeometryProfile",
    "EmbeddingProfile",
    "DerivativeQualityWarning",
    "ComplexEmbeddingError",
    "fd_weights",
    "log_derivatives_tabulated",
    "radius_from_superpotential",
    "potential_from_geometry",
    "potential_from_log_derivatives",
    "isotropic_rho",
    "r_of_rho",
    "embedding_radicand",
    "embedding_cdt_drho",
    "rho_min",
    "embedding_profile",
    "ellis_radius",
]

_GEOMETRY_KINDS = ("closed_form_coulomb", "ellis", "tabulated")


class DerivativeQualityWarning(UserWarning):
    """Finite-difference derivatives of a tabulated radius look unreliable."""


class ComplexEmbeddingError(ValueError):
    """The embedding radicand is negative: no real embedding at this radius."""

    def __init__(self, rho: float, radicand: float):
        self.rho = rho
        self.radicand = radicand
        super().__init__(f"embedding is complex at rho = {rho:.12g} (radicand {radicand:.6g})")


def fd_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at ``z`` on nodes ``x`` (Fornberg 1988)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def _stencil_derivatives(x: np.ndarray, y: np.ndarray, width: int):
    n = x.size
    half = width // 2
    d1 = np.empty(n)
    d2 = np.empty(n)
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        idx = slice(lo, lo + width)
        w = fd_weights(x[i], x[idx], 2)
        d1[i] = w[:, 1] @ y[idx]
        d2[i] = w[:, 2] @ y[idx]
    return d1, d2


def log_derivatives_tabulated(r: np.ndarray, R: np.ndarray, warn: bool = True):
    """``(ln R)'`` and ``(ln R)''`` from samples, 5-point stencils (one-sided at the edges).

    Returns ``(d1, d2, low_confidence)`` where ``low_confidence`` flags the two
    samples at each end that use one-sided stencils.  Emits
    :class:`DerivativeQualityWarning` when 3- and 5-point estimates of the
    second derivative disagree by more than 1e-3 of its scale.
    """
    r = np.asarray(r, dtype=float)
    R = np.asarray(R, dtype=float)
    if r.size < 5:
        raise ValueError("need at least 5 samples for derivative stencils")
    if np.any(R <= 0):
        raise DomainError("metric radius must be positive")
    y = np.log(R)
    d1, d2 = _stencil_derivatives(r, y, 5)
    low = np.zeros(r.size, dtype=bool)
    low[:2] = low[-2:] = True
    if warn:
        _, d2_coarse = _stencil_derivatives(r, y, 3)
        scale = max(np.max(np.abs(d2[~low])), np.max(np.abs(d1[~low])) ** 2, 1e-300)
        disagreement = np.max(np.abs(d2 - d2_coarse)[~low]) / scale
        if disagreement > 1e-3:
            warnings.warn(
                f"tabulated radius looks too coarse: second-derivative estimates differ by "
                f"{disagreement:.2g} of scale",
                DerivativeQualityWarning,
                stacklevel=3,
            )
    return d1, d2, low


@dataclass(frozen=True, eq=False)
class GeometryProfile:
    """A metric radius ``R`` defining ``ds^2 = dr^2 + R(r)^2 dOmega^2``.

    Kinds: ``closed_form_coulomb`` (``K r exp(2 kappa r/(N-1)^2)``),
    ``ellis`` (``sqrt(R0^2 + w^2)`` on the whole line) and ``tabulated``
    samples with optional sampled first and second derivatives.
    """

    kind: str
    K: float = 1.0
    kappa: float = 0.0
    N: int = 3
    R0: float = 1.0
    r_grid: np.ndarray | None = None
    R_values: np.ndarray | None = None
    dR: np.ndarray | None = None
    d2R: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _GEOMETRY_KINDS:
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.kind == "closed_form_coulomb" and not self.K > 0:
            raise ValueError("K must be positive")
        if self.kind == "ellis" and not self.R0 > 0:
            raise ValueError("R0 must be positive")
        if self.kind == "tabulated":
            r = np.asarray(self.r_grid, dtype=float)
            R = np.asarray(self.R_values, dtype=float)
            if r.ndim != 1 or r.shape != R.shape:
                raise ValueError("r_grid and R_values must be 1-d and equal length")
            if np.any(np.diff(r) <= 0):
                raise ValueError("r_grid must be strictly increasing")
            if np.any(R <= 0):
                raise ValueError("R must be positive")
            object.__setattr__(self, "r_grid", r)
            object.__setattr__(self, "R_values", R)
            for name in ("dR", "d2R"):
                v = getattr(self, name)
                if v is not None:
                    v = np.asarray(v, dtype=float)
                    if v.shape != r.shape:
                        raise ValueError(f"{name} must match r_grid")
                    object.__setattr__(self, name, v)

    @classmethod
    def closed_form_coulomb(cls, K: float, kappa: float, N: int) -> "GeometryProfile":
        return cls("closed_form_coulomb", K=float(K), kappa=float(kappa), N=int(N))

    @classmethod
    def flat(cls) -> "GeometryProfile":
        return cls("closed_form_coulomb", K=1.0, kappa=0.0)

    @classmethod
    def ellis(cls, R0: float) -> "GeometryProfile":
        return cls("ellis", R0=float(R0))

    @classmethod
    def tabulated(cls, r, R, dR=None, d2R=None) -> "GeometryProfile":
        return cls("tabulated", r_grid=r, R_values=R, dR=dR, d2R=d2R)

    @staticmethod
    def coulomb_K(R0: float, r0: float, kappa: float, N: int) -> float:
        """Normalisation ``K = (R0/r0) exp(-2 kappa r0/(N-1)^2)`` fixing ``R(r0) = R0``."""
        return R0 / r0 * math.exp(-2.0 * kappa * r0 / (N - 1) ** 2)

    def radius(self, r):
        if self.kind == "closed_form_coulomb":
            return self.K * r * np.exp(2.0 * self.kappa * r / (self.N - 1) ** 2)
        if self.kind == "ellis":
            return ellis_radius(r, self.R0)
        return np.interp(r, self.r_grid, self.R_values)

    def log_derivatives(self, r=None, warn: bool = True):
        """``((ln R)', (ln R)'')`` at ``r`` (closed forms) or on the grid (tabulated)."""
        if self.kind == "closed_form_coulomb":
            r = np.asarray(r, dtype=float)
            return 1.0 / r + 2.0 * self.kappa / (self.N - 1) ** 2, -1.0 / (r * r)
        if self.kind == "ellis":
            r = np.asarray(r, dtype=float)
            R2 = self.R0**2 + r * r
            return r / R2, (self.R0**2 - r * r) / (R2 * R2)
        if r is not None:
            raise ValueError("tabulated profiles only provide derivatives on their own grid")
        if self.dR is not None and self.d2R is not None:
            L1 = self.dR / self.R_values
            return L1, self.d2R / self.R_values - L1 * L1
        d1, d2, _ = log_derivatives_tabulated(self.r_grid, self.R_values, warn=warn)
        return d1, d2

    def describe(self) -> dict:
        if self.kind == "closed_form_coulomb":
            return {"kind": self.kind, "K": self.K, "kappa": self.kappa, "N": self.N}
        if self.kind == "ellis":
            return {"kind": self.kind, "R0": self.R0}
        return {"kind": self.kind, "n_points": int(self.r_grid.size)}


def radius_from_superpotential(sol: SuperpotentialSolution) -> GeometryProfile:
    """``R(r) = R0 exp(2 S(r)/(N-1))`` on the solution grid, with ``R' = 2 W R/(N-1)``."""
    p = sol.params
    R = p.R0 * np.exp(2.0 * sol.S_values / (p.N - 1))
    dR = 2.0 * sol.W_values * R / (p.N - 1)
    return GeometryProfile.tabulated(sol.r_grid, R, dR=dR)


def potential_from_log_derivatives(r, R, L1, L2, N: int, ell: int):
    """``U = (N-1)/2 L2 + ((N-1)/2)^2 L1^2 + ell(ell+N-2)/R^2 - c_ell/r^2``.

    ``L1`` and ``L2`` are the first two derivatives of ``ln R``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("the flat-space potential is undefined at r <= 0")
    h = 0.5 * (N - 1)
    return h * L2 + h * h * L1 * L1 + ell * (ell + N - 2) / (R * R) - centrifugal_coefficient(N, ell) / (r * r)


def potential_from_geometry(g: GeometryProfile, N: int, ell: int) -> PotentialSpec:
    """Flat-space potential reproducing free motion on ``g`` in angular-momentum sector ``ell``."""
    if g.kind == "tabulated":
        L1, L2 = g.log_derivatives()
        r = g.r_grid
        U = potential_from_log_derivatives(r, g.R_values, L1, L2, N, ell)
        low = np.zeros(r.size, dtype=bool)
        if g.dR is None or g.d2R is None:
            low[:2] = low[-2:] = True
        return PotentialSpec.tabulated(r, U, low_confidence=low)

    def U(r):
        if np.any(np.asarray(r) <= 0):
            raise DomainError("the flat-space potential is undefined at r <= 0")
        L1, L2 = g.log_derivatives(r)
        out = potential_from_log_derivatives(r, g.radius(r), L1, L2, N, ell)
        return float(out) if np.ndim(out) == 0 else out

    return PotentialSpec.closed_form(U, name=f"{g.kind} geometry, N={N}, ell={ell}")


# ---------------------------------------------------------------------------
# isotropic coordinates and embedding of R = K r exp(2 kappa r/(N-1)^2)


def isotropic_rho(r, K: float, kappa: float, N: int):
    """``rho = K r exp(2 kappa r/(N-1)^2)``, so that the angular metric is ``rho^2``."""
    return K * r * np.exp(2.0 * kappa * r / (N - 1) ** 2)


def _lambert_arg(rho: float, K: float, kappa: float, N: int) -> float:
    return 2.0 * kappa * rho / (K * (N - 1) ** 2)


def _check_embedding_args(rho, K, kappa):
    if not K > 0:
        raise DomainError(f"K must be positive, got {K!r}")
    if kappa < 0:
        raise DomainError("kappa < 0 is not supported (attractive case)")
    if rho < 0:
        raise DomainError(f"rho must be non-negative, got {rho!r}")


def r_of_rho(rho: float, K: float, kappa: float, N: int) -> tuple[float, float]:
    """Invert :func:`isotropic_rho`: ``r = (N-1)^2/(2 kappa) W0(2 kappa rho/(K (N-1)^2))``.

    Also returns ``dr/drho``.  Since ``W0(z)/z = exp(-W0(z))`` the derivative
    ``(N-1)^2/(2 kappa rho) W0/(1+W0)`` is evaluated as ``exp(-W0)/(K (1+W0))``,
    which stays finite at ``rho = 0``.  ``kappa = 0`` gives ``(rho/K, 1/K)``.
    """
    _check_embedding_args(rho, K, kappa)
    if kappa == 0:
        return rho / K, 1.0 / K
    w = lambert_w0(_lambert_arg(rho, K, kappa, N))
    r = (N - 1) ** 2 / (2.0 * kappa) * w
    return r, math.exp(-w) / (K * (1.0 + w))


def embedding_radicand(rho: float, K: float, kappa: float, N: int) -> float:
    """``(1+W0)^2 - ((N-1)^2 W0/(2 kappa rho))^2``, i.e. ``(1+W0)^2 - exp(-2 W0)/K^2``."""
    _check_embedding_args(rho, K, kappa)
    if kappa == 0:
        return 1.0 - 1.0 / (K * K)
    w = lambert_w0(_lambert_arg(rho, K, kappa, N))
    q = math.exp(-w) / K
    return (1.0 + w) ** 2 - q * q


def embedding_cdt_drho(rho: float, K: float, kappa: float, N: int) -> float:
    """``c dt/drho`` of the embedding into ``N+1`` dimensional Lorentz space.

    Raises :class:`ComplexEmbeddingError` where the radicand is negative,
    i.e. below ``rho_min`` when ``K < 1``.
    """
    rad = embedding_radicand(rho, K, kappa, N)
    if rad < 0:
        raise ComplexEmbeddingError(rho, rad)
    w = 0.0 if kappa == 0 else lambert_w0(_lambert_arg(rho, K, kappa, N))
    return math.sqrt(rad) / (1.0 + w)


def rho_min(K: float, kappa: float, N: int, tol: Tolerance | None = None) -> float:
    """Smallest ``rho`` with a real embedding, for ``0 < K < 1`` and ``kappa > 0``.

    The returned value satisfies ``radicand(rho_min) >= 0`` and is within a
    few ulps of the root.
    """
    if not 0 < K < 1:
        raise DomainError(f"rho_min needs 0 < K < 1, got {K!r}")
    if not kappa > 0:
        raise DomainError(f"rho_min needs kappa > 0, got {kappa!r}")

    def f(rho):
        return embedding_radicand(rho, K, kappa, N)

    b = K * (N - 1) ** 2 / (2.0 * kappa)
    for _ in range(200):
        if f(b) > 0:
            break
        b *= 2.0
    else:
        raise BracketError("could not bracket the embedding radicand root")
    if tol is None:
        tol = Tolerance(abs_tol=1e-16 * b, rel_tol=1e-15, max_iter=400)
    root = find_root_bracketed(f, 0.0, b, tol)
    while f(root) < 0:
        root = math.nextafter(root, math.inf)
    grid = np.geomspace(root, 1e3 * root, 64)[1:]
    if min(f(x) for x in grid) < 0:
        raise ComplexEmbeddingError(root, min(f(x) for x in grid))
    return root


@dataclass
class EmbeddingProfile:
    rho_grid: np.ndarray
    r_of_rho: np.ndarray
    dr_drho: np.ndarray
    cdt_drho: np.ndarray
    rho_min: float | None
    K: float
    kappa: float
    N: int


def embedding_profile(
    K: float, kappa: float, N: int, rho_max: float, n: int = 200, rho_lo: float | None = None
) -> EmbeddingProfile:
    """Log-spaced samples of the embedding between ``rho_min`` (or ``rho_lo``) and ``rho_max``.

    For ``K < 1`` the grid starts exactly at ``rho_min``; for ``K >= 1`` it
    starts at ``rho_lo`` (default ``1e-6 rho_max``).
    """
    if n < 2:
        raise ValueError("need at least 2 samples")
    rmin = rho_min(K, kappa, N) if (K < 1 and kappa > 0) else None
    if K < 1 and kappa == 0:
        raise ComplexEmbeddingError(0.0, 1.0 - 1.0 / K**2)
    start = rmin if rmin is not None else (rho_lo if rho_lo is not None else 1e-6 * rho_max)
    if not 0 < start < rho_max:
        raise ValueError(f"empty rho range [{start}, {rho_max}]")
    rho = np.geomspace(start, rho_max, n)
    rho[0] = start
    rs, drs, cdts = [], [], []
    for x in rho:
        r, dr = r_of_rho(float(x), K, kappa, N)
        rs.append(r)
        drs.append(dr)
        cdts.append(embedding_cdt_drho(float(x), K, kappa, N))
    return EmbeddingProfile(rho, np.array(rs), np.array(drs), np.array(cdts), rmin, K, kappa, N)


def ellis_radius(w, R0: float):
    """``sqrt(R0^2 + w^2)``: throat radius ``R0`` at ``w = 0``."""
    if not R0 > 0:
        raise DomainError(f"R0 must be positive, got {R0!r}")
    return np.hypot(R0, w) if np.ndim(w) else math.hypot(R0, w)
