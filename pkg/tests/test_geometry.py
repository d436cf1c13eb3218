import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings, strategies as st

from geodual.geometry import (
    ComplexEmbeddingError,
    DerivativeQualityWarning,
    GeometryProfile,
    embedding_cdt_drho,
    embedding_profile,
    embedding_radicand,
    ellis_radius,
    fd_weights,
    isotropic_rho,
    log_derivatives_tabulated,
    potential_from_geometry,
    r_of_rho,
    radius_from_superpotential,
    rho_min,
)
from geodual.riccati import (
    ModelParams,
    PotentialSpec,
    closed_form_coulomb_plus_const,
    flat_seed,
    solve_modified_riccati,
)
from geodual.specialfns import DomainError


def bisect(f, a, b, n=200):
    fa = f(a)
    for _ in range(n):
        m = 0.5 * (a + b)
        if (f(m) > 0) == (fa > 0):
            a, fa = m, f(m)
        else:
            b = m
    return 0.5 * (a + b)


class TestFdWeights:
    def test_central_second_derivative(self):
        w = fd_weights(0.0, np.array([-1.0, 0.0, 1.0]), 2)
        assert np.allclose(w[:, 2], [1.0, -2.0, 1.0])

    def test_five_point_first_derivative(self):
        w = fd_weights(0.0, np.arange(-2.0, 3.0), 1)
        assert np.allclose(w[:, 1], np.array([1, -8, 0, 8, -1]) / 12.0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(min_value=-3, max_value=3), min_size=5, max_size=5, unique=True))
    def test_exact_on_polynomials(self, xs):
        x = np.sort(np.array(xs))
        assume(np.min(np.diff(x)) > 0.05)
        w = fd_weights(0.3, x, 2)
        y = 1 + 2 * x - x**2 + 0.5 * x**3
        assert np.dot(w[:, 1], y) == pytest.approx(2 - 0.6 + 1.5 * 0.09, abs=1e-9)
        assert np.dot(w[:, 2], y) == pytest.approx(-2 + 3 * 0.3, abs=1e-8)


class TestRadius:
    def test_flat_seed_gives_r(self):
        p = ModelParams(N=3, R0=1.0, r0=1.0)
        sol = solve_modified_riccati(PotentialSpec.zero(), p, (0.5, 5.0), flat_seed(0.5, 3))
        g = radius_from_superpotential(sol)
        assert np.allclose(g.R_values, sol.r_grid, rtol=1e-10)

    def test_coulomb_geometry(self):
        p = ModelParams(N=3, R0=1.0, r0=1.0, kappa=1.0)
        U = PotentialSpec.coulomb_plus_const(1.0, 3)
        sol = solve_modified_riccati(U, p, (0.2, 5.0), closed_form_coulomb_plus_const(0.2, p))
        g = radius_from_superpotential(sol)
        K = GeometryProfile.coulomb_K(1.0, 1.0, 1.0, 3)
        assert K == pytest.approx(math.exp(-0.5))
        assert np.allclose(g.R_values, K * sol.r_grid * np.exp(sol.r_grid / 2), rtol=1e-9)

    def test_R_at_r0(self):
        p = ModelParams(N=4, R0=2.5, r0=1.7, kappa=0.3)
        U = PotentialSpec.coulomb_plus_const(0.3, 4)
        sol = solve_modified_riccati(U, p, (0.5, 4.0), closed_form_coulomb_plus_const(0.5, p), r_eval=np.array([0.5, 1.7, 4.0]))
        assert radius_from_superpotential(sol).R_values[1] == pytest.approx(2.5, rel=1e-14)

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            GeometryProfile.tabulated([1, 2, 3], [1, -1, 2])
        with pytest.raises(ValueError):
            GeometryProfile.closed_form_coulomb(0.0, 1.0, 3)
        with pytest.raises(ValueError):
            GeometryProfile("sphere")


class TestPotentialFromGeometry:
    @pytest.mark.parametrize("N", [2, 3, 5])
    @pytest.mark.parametrize("ell", [0, 1, 3])
    def test_flat_space_free(self, N, ell):
        U = potential_from_geometry(GeometryProfile.flat(), N, ell)
        r = np.geomspace(0.1, 10, 50)
        assert np.max(np.abs(U(r))) <= 1e-12 * max(1, ell * ell) / 0.01

    @pytest.mark.parametrize("N,kappa", [(2, 1.0), (3, 1.0), (4, 0.5), (6, 3.0)])
    def test_coulomb_inversion(self, N, kappa):
        g = GeometryProfile.closed_form_coulomb(0.7, kappa, N)
        U = potential_from_geometry(g, N, 0)
        r = np.geomspace(0.05, 20, 40)
        assert np.allclose(U(r), kappa / r + kappa**2 / (N - 1) ** 2, rtol=1e-12)

    def test_coulomb_inversion_symbolic(self):
        r, K, k, N = sp.symbols("r K kappa N", positive=True)
        R = K * r * sp.exp(2 * k * r / (N - 1) ** 2)
        L = sp.log(R)
        U = (N - 1) / 2 * sp.diff(L, r, 2) + ((N - 1) / 2) ** 2 * sp.diff(L, r) ** 2 - (N - 1) * (N - 3) / (4 * r**2)
        assert sp.simplify(U - (k / r + k**2 / (N - 1) ** 2)) == 0

    @pytest.mark.parametrize("m", [1, 2])
    def test_two_dimensional_tabulated_symbolic(self, m):
        r = sp.symbols("r", positive=True)
        R = r * (1 + sp.Rational(1, 10) * r**2)
        # 2D: U = (ln R)''/2 + (ln R)'^2/4 + m^2/R^2 - (m^2 - 1/4)/r^2
        # (identically zero for m = 1 on this profile, nonzero for m = 2)
        L = sp.log(R)
        U2 = sp.diff(L, r, 2) / 2 + sp.diff(L, r) ** 2 / 4 + m**2 / R**2 - (m**2 - sp.Rational(1, 4)) / r**2
        ref = float(U2.subs(r, 1))
        rg = np.linspace(0.5, 1.5, 1001)
        g = GeometryProfile.tabulated(rg, rg * (1 + 0.1 * rg**2))
        U = potential_from_geometry(g, 2, m)
        assert U(1.0) == pytest.approx(ref, rel=1e-8, abs=1e-8)
        assert bool(U.low_confidence[0]) and not bool(U.low_confidence[500])

    def test_domain_error_at_zero(self):
        U = potential_from_geometry(GeometryProfile.flat(), 3, 1)
        with pytest.raises(DomainError):
            U(0.0)

    def test_coarse_grid_warns(self):
        r = np.linspace(0.5, 5, 12)
        R = r * (1 + 0.3 * np.sin(6 * r) ** 2)
        with pytest.warns(DerivativeQualityWarning):
            log_derivatives_tabulated(r, R)

    def test_smooth_grid_quiet(self):
        r = np.linspace(0.5, 5, 401)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            d1, d2, low = log_derivatives_tabulated(r, r * np.exp(0.2 * r))
        assert np.allclose(d1[2:-2], 1 / r[2:-2] + 0.2, rtol=1e-6)
        assert np.allclose(d2[2:-2], -1 / r[2:-2] ** 2, rtol=1e-5)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=2, max_value=7), st.integers(min_value=0, max_value=4), st.floats(min_value=0.3, max_value=3.0))
    def test_scaling_R_shifts_only_angular_term(self, N, ell, scale):
        # R -> a R leaves (ln R)' unchanged; only ell(ell+N-2)/R^2 rescales
        g1 = GeometryProfile.closed_form_coulomb(1.0, 0.5, N)
        g2 = GeometryProfile.closed_form_coulomb(scale, 0.5, N)
        r = np.geomspace(0.2, 5, 20)
        d = potential_from_geometry(g1, N, ell)(r) - potential_from_geometry(g2, N, ell)(r)
        expect = ell * (ell + N - 2) * (1 - 1 / scale**2) / g1.radius(r) ** 2
        assert np.allclose(d, expect, rtol=1e-9, atol=1e-12)


class TestDualityRoundtrip:
    @pytest.mark.parametrize("ell", [0, 1, 2])
    def test_roundtrip(self, ell):
        N = 3
        r = np.linspace(0.5, 5.0, 901)
        R = r * (1 + 0.3 * np.exp(-((r - 2) ** 2)))
        g = GeometryProfile.tabulated(r, R)
        U = potential_from_geometry(g, N, ell)
        L1, _ = g.log_derivatives()
        p = ModelParams(N=N, ell=ell, R0=float(R[0]), r0=float(r[0]))
        sol = solve_modified_riccati(U, p, (r[0], r[-1]), (N - 1) / 2 * L1[0], r_eval=r)
        back = radius_from_superpotential(sol).R_values
        inner = slice(90, 811)
        assert np.max(np.abs(back[inner] / R[inner] - 1)) <= 1e-4


class TestEmbedding:
    def test_isotropic_values(self):
        assert isotropic_rho(1.0, 1.0, 1.0, 3) == pytest.approx(math.exp(0.5))
        assert isotropic_rho(0.0, 1.0, 1.0, 3) == 0.0
        assert isotropic_rho(2.0, 0.7, 0.0, 3) == pytest.approx(1.4)

    def test_r_of_rho_lambert_value(self):
        # 4 * W0(0.25) with W0 from bisection on w e^w = 0.25
        w = bisect(lambda x: x * math.exp(x) - 0.25, 0.0, 1.0)
        assert r_of_rho(1.0, 1.0, 0.5, 3)[0] == pytest.approx(4 * w, rel=1e-13)

    def test_kappa_zero(self):
        assert r_of_rho(2.0, 4.0, 0.0, 3) == (0.5, 0.25)

    def test_kappa_to_zero_limit(self):
        r, _ = r_of_rho(2.0, 4.0, 1e-9, 3)
        assert r == pytest.approx(0.5, rel=1e-8)

    def test_negative_kappa_rejected(self):
        with pytest.raises(DomainError):
            r_of_rho(1.0, 1.0, -1.0, 3)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=1e-6, max_value=1e3),
        st.floats(min_value=0.05, max_value=5.0),
        st.floats(min_value=1e-3, max_value=5.0),
        st.integers(min_value=2, max_value=8),
    )
    def test_roundtrip(self, r, K, kappa, N):
        with np.errstate(over="ignore"):
            rho = isotropic_rho(r, K, kappa, N)
        assume(np.isfinite(rho) and rho < 1e300)
        back, dr = r_of_rho(float(rho), K, kappa, N)
        assert back == pytest.approx(r, rel=1e-12)
        # dr/drho is the reciprocal of drho/dr
        drho_dr = K * math.exp(2 * kappa * r / (N - 1) ** 2) * (1 + 2 * kappa * r / (N - 1) ** 2)
        assert dr * drho_dr == pytest.approx(1.0, rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=1e-6, max_value=1e4),
        st.floats(min_value=1.0, max_value=5.0),
        st.floats(min_value=1e-3, max_value=5.0),
        st.integers(min_value=2, max_value=8),
    )
    def test_unit_slope(self, rho, K, kappa, N):
        # (dr/drho)^2 + (c dt/drho)^2 = 1 for the Lorentz embedding
        _, dr = r_of_rho(rho, K, kappa, N)
        cdt = embedding_cdt_drho(rho, K, kappa, N)
        assert dr * dr + cdt * cdt == pytest.approx(1.0, rel=1e-12)

    def test_rho_min_value(self):
        K, kappa, N = 0.5, 1.0, 3
        ref = bisect(lambda x: embedding_radicand(x, K, kappa, N), 1e-6, 10.0)
        assert rho_min(K, kappa, N) == pytest.approx(ref, rel=1e-13)
        assert rho_min(K, kappa, N) == pytest.approx(0.5452667824389353, rel=1e-13)

    def test_complex_below_rho_min(self):
        rm = rho_min(0.5, 1.0, 3)
        with pytest.raises(ComplexEmbeddingError):
            embedding_cdt_drho(rm * (1 - 1e-6), 0.5, 1.0, 3)
        assert embedding_cdt_drho(rm * (1 + 1e-6), 0.5, 1.0, 3) > 0

    @pytest.mark.parametrize("K", [1.0, 2.0])
    def test_real_down_to_zero_for_K_at_least_one(self, K):
        for rho in np.geomspace(1e-8, 100, 200):
            assert embedding_radicand(float(rho), K, 1.0, 3) >= 0

    @pytest.mark.parametrize("K", [1.0, 2.0])
    def test_rho_min_needs_K_below_one(self, K):
        with pytest.raises(DomainError):
            rho_min(K, 1.0, 3)

    def test_profile(self):
        prof = embedding_profile(0.5, 1.0, 3, 5.0, n=100)
        assert prof.rho_grid[0] == prof.rho_min
        assert np.all(np.diff(prof.r_of_rho) > 0)
        assert np.all(prof.cdt_drho >= 0)
        assert embedding_profile(2.0, 1.0, 3, 5.0, n=10).rho_min is None

    def test_flat_K_below_one_not_embeddable(self):
        with pytest.raises(ComplexEmbeddingError):
            embedding_profile(0.5, 0.0, 3, 5.0)


class TestEllis:
    def test_values(self):
        assert ellis_radius(0.0, 2.0) == 2.0
        assert ellis_radius(3.0, 4.0) == 5.0
        assert ellis_radius(-3.0, 4.0) == ellis_radius(3.0, 4.0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=-1e3, max_value=1e3), st.floats(min_value=0.1, max_value=100))
    def test_asymptotic_flatness(self, w, R0):
        R = ellis_radius(w, R0)
        assert R >= R0
        assert R * R - w * w == pytest.approx(R0 * R0, rel=1e-9, abs=8e-16 * w * w)

    def test_profile_derivatives(self):
        g = GeometryProfile.ellis(1.5)
        w = np.linspace(-3, 3, 7)
        L1, L2 = g.log_derivatives(w)
        h = 1e-5
        num = (np.log(g.radius(w + h)) - np.log(g.radius(w - h))) / (2 * h)
        assert np.allclose(L1, num, atol=1e-9)
