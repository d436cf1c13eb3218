"""Special functions and scalar root finding used throughout the package.

Everything here is a pure function of its arguments.  The implementations are
deliberately small and self-contained: the principal Lambert W branch (Halley
iteration), the modified Bessel functions I0 and I1 (power series below
``x = 15``, Hankel asymptotic expansion above), and a safeguarded
bisection/secant bracketing root finder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = [
    "Tolerance",
    "DomainError",
    "ConvergenceError",
    "BracketError",
    "lambert_w0",
    "bessel_i",
    "bessel_i_scaled",
    "find_root_bracketed",
]

INV_E = math.exp(-1.0)
_EPS = 2.220446049250313e-16

# switch-over between power series and asymptotic expansion of I_n
_BESSEL_SERIES_MAX = 15.0


class DomainError(ValueError):
    """Argument outside the domain where the function is defined (here)."""


class ConvergenceError(RuntimeError):
    """An iteration did not converge within ``max_iter`` steps."""


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-14
    rel_tol: float = 1e-14
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_TOL = Tolerance()


def _lambert_seed(x: float) -> float:
    if x < -0.25:
        # branch-point series in p = sqrt(2(ex + 1))
        p = math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    if x < 3.0:
        # rational fit good to a few percent on [-0.25, 3]
        return x / (1.0 + x) * (1.0 + 0.2 * math.log1p(x)) if x > 0 else x * (1.0 - x)
    lx = math.log(x)
    llx = math.log(lx)
    return lx - llx + llx / lx


def lambert_w0(x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Principal branch of the Lambert W function for real ``x >= -1/e``.

    Returns ``w >= -1`` with ``w * exp(w) == x``.  Halley's iteration is used,
    seeded by the branch-point series near ``-1/e``, a rational guess for
    moderate ``x`` and the ``log x - log log x`` asymptote for large ``x``.

    >>> round(lambert_w0(1.0), 10)
    0.5671432904
    """
    x = float(x)
    if math.isnan(x):
        raise DomainError("lambert_w0 of NaN")
    if x < -INV_E:
        # tolerate round-off in arguments computed as -1/e
        if x > -INV_E * (1.0 + 4.0 * _EPS):
            return -1.0
        raise DomainError(f"lambert_w0 requires x >= -1/e, got {x!r}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    if x == -INV_E:
        return -1.0

    w = _lambert_seed(x)
    for _ in range(tol.max_iter):
        ew = math.exp(w)
        f = w * ew - x
        # residual at round-off level: near -1/e the iterate itself is only
        # determined to ~sqrt(eps), so |dw| alone would never settle
        if abs(f) <= 4.0 * _EPS * abs(x):
            return w
        wp1 = w + 1.0
        if wp1 == 0.0:
            return w
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if w < -1.0:
            w = -1.0
        if abs(dw) <= tol.abs_tol + tol.rel_tol * abs(w):
            return w
    raise ConvergenceError(f"lambert_w0({x!r}) did not converge in {tol.max_iter} iterations")


def _bessel_series(order: int, x: float) -> float:
    half = 0.5 * x
    q = half * half
    term = 1.0 if order == 0 else half
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + order))
        total += term
        if term <= 1e-17 * total:
            return total


def _bessel_asymptotic_scaled(order: int, x: float) -> float:
    # e^{-x} I_n(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(n) / x^k, truncated at its smallest term
    mu = 4.0 * order * order
    term = 1.0
    total = 1.0
    prev = math.inf
    for k in range(1, 200):
        term *= -(mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(term) >= prev:
            break
        total += term
        prev = abs(term)
        if abs(term) <= 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * x)


def _check_bessel_args(order: int, x: float) -> None:
    if order not in (0, 1):
        raise DomainError(f"bessel_i supports orders 0 and 1 only, got {order!r}")
    if not x >= 0.0:
        raise DomainError(f"bessel_i requires x >= 0, got {x!r}")


def bessel_i(order: int, x: float) -> float:
    """Modified Bessel function of the first kind, ``I_0`` or ``I_1``, for ``x >= 0``."""
    x = float(x)
    _check_bessel_args(order, x)
    if x <= _BESSEL_SERIES_MAX:
        return _bessel_series(order, x)
    return math.exp(x) * _bessel_asymptotic_scaled(order, x)


def bessel_i_scaled(order: int, x: float) -> float:
    """``exp(-x) * I_n(x)``; finite for arguments where ``I_n`` overflows."""
    x = float(x)
    _check_bessel_args(order, x)
    if x <= _BESSEL_SERIES_MAX:
        return math.exp(-x) * _bessel_series(order, x)
    return _bessel_asymptotic_scaled(order, x)


def find_root_bracketed(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Root of ``f`` in ``[a, b]`` by bisection with a secant step per iteration.

    Every iteration tries the secant point of the current bracket and then
    bisects, so the bracket at least halves each time and the iteration cannot
    stall.  Stops when the bracket is narrower than ``tol.abs_tol`` (or cannot
    be split in floating point) and returns whichever endpoint has the
    smaller ``|f|``.  The result always lies in ``[a, b]``.

    Raises
    ------
    BracketError
        If ``a >= b`` or ``f(a)`` and ``f(b)`` have the same strict sign.
    ConvergenceError
        If the bracket is still too wide after ``tol.max_iter`` iterations.
    """
    a = float(a)
    b = float(b)
    if not a < b:
        raise BracketError(f"need a < b, got [{a}, {b}]")
    fa = f(a)
    fb = f(b)
    if math.isnan(fa) or math.isnan(fb):
        raise BracketError(f"f is NaN at a bracket end: f(a)={fa!r}, f(b)={fb!r}")
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    # sign tests compare signs directly; products of tiny values underflow to zero
    if (fa > 0.0) == (fb > 0.0):
        raise BracketError(f"f(a)={fa!r} and f(b)={fb!r} have the same sign on [{a}, {b}]")

    for _ in range(tol.max_iter):
        if b - a <= tol.abs_tol:
            break
        # secant trial, kept only if strictly inside the bracket
        s = b - fb * (b - a) / (fb - fa)
        if a < s < b:
            fs = f(s)
            if fs == 0.0:
                return s
            if (fa > 0.0) != (fs > 0.0):
                b, fb = s, fs
            else:
                a, fa = s, fs
        m = a + 0.5 * (b - a)
        if m <= a or m >= b:
            break
        fm = f(m)
        if fm == 0.0:
            return m
        if (fa > 0.0) != (fm > 0.0):
            b, fb = m, fm
        else:
            a, fa = m, fm
    else:
        if b - a > tol.abs_tol:
            raise ConvergenceError(
                f"bracket [{a}, {b}] still wider than {tol.abs_tol} after {tol.max_iter} iterations"
            )
    return a if abs(fa) <= abs(fb) else b
