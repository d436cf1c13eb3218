import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from geodual.geometry import GeometryProfile
from geodual.scattering import (
    BelowBarrierWarning,
    LinePotential,
    Numerics,
    ResolutionError,
    auto_numerics,
    ellis_line_potential,
    ellis_potential,
    line_potential_from_geometry,
    line_tail_coefficient,
    numerov_wavenumber,
    phase_shift_sweep,
    solve_scattering,
    square_barrier,
    window_halfwidth,
    zero_potential,
)
from geodual.specialfns import DomainError

pytestmark = pytest.mark.filterwarnings("ignore::geodual.scattering.BelowBarrierWarning")


def barrier_amplitudes(U0, a, eps):
    """Plane-wave matching at w = +-a for incidence from the right (4x4 linear solve)."""
    k = math.sqrt(eps)
    q = cmath.sqrt(eps - U0)
    e = cmath.exp
    M = np.array(
        [
            [e(1j * k * a), -e(1j * q * a), -e(-1j * q * a), 0],
            [1j * k * e(1j * k * a), -1j * q * e(1j * q * a), 1j * q * e(-1j * q * a), 0],
            [0, e(-1j * q * a), e(1j * q * a), -e(1j * k * a)],
            [0, 1j * q * e(-1j * q * a), -1j * q * e(1j * q * a), 1j * k * e(1j * k * a)],
        ],
        dtype=complex,
    )
    rhs = np.array([-e(-1j * k * a), 1j * k * e(-1j * k * a), 0, 0])
    r, _, _, t = np.linalg.solve(M, rhs)
    return t, r


def textbook_transmission(U0, a, eps):
    """|t|^2 for a barrier of width 2a."""
    if eps > U0:
        s = math.sin(2 * a * math.sqrt(eps - U0))
        return 1.0 / (1.0 + U0 * U0 * s * s / (4 * eps * (eps - U0)))
    s = math.sinh(2 * a * math.sqrt(U0 - eps))
    return 1.0 / (1.0 + U0 * U0 * s * s / (4 * eps * (U0 - eps)))


class TestPotentials:
    def test_ellis_peak(self):
        assert ellis_line_potential(0.0, 3, 0, 1.0) == 1.0
        assert ellis_line_potential(0.0, 3, 1, 1.0) == 3.0
        assert ellis_line_potential(0.0, 6, 0, 1.0) == 2.5

    @pytest.mark.parametrize("w", [-3.0, 0.0, 0.7, 10.0])
    def test_ellis_five_dimensions_has_no_quartic_term(self, w):
        for ell in range(4):
            R2 = 1.0 + w * w
            assert ellis_line_potential(w, 5, ell, 1.0) == pytest.approx(line_tail_coefficient(5, ell) / R2, rel=1e-15)

    @pytest.mark.parametrize("N", [2, 3, 4, 5, 6, 7, 8])
    def test_quartic_sign(self, N):
        # coefficient of 1/R^4 is -(N-1)(N-5)/4 R0^2
        coef = -(N - 1) * (N - 5) / 4
        w = 3.0
        R2 = 1.0 + w * w
        quartic = (ellis_line_potential(w, N, 0, 1.0) - line_tail_coefficient(N, 0) / R2) * R2 * R2
        assert quartic == pytest.approx(coef, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=4),
           st.floats(min_value=0.1, max_value=10), st.floats(min_value=-50, max_value=50))
    def test_geometry_formula_matches_closed_form(self, N, ell, R0, w):
        U = line_potential_from_geometry(GeometryProfile.ellis(R0), N, ell)
        assert U(w) == pytest.approx(ellis_line_potential(w, N, ell, R0), rel=1e-12, abs=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=4),
           st.floats(min_value=0, max_value=1e3))
    def test_ellis_even(self, N, ell, w):
        assert ellis_line_potential(w, N, ell, 1.3) == ellis_line_potential(-w, N, ell, 1.3)

    def test_decays(self):
        assert abs(ellis_line_potential(1e4, 3, 0, 1.0)) < 1e-15

    def test_tabulated_geometry(self):
        w = np.linspace(-30, 30, 6001)
        U = line_potential_from_geometry(GeometryProfile.tabulated(w, np.hypot(1.0, w)), 3, 1)
        x = np.linspace(-5, 5, 11)
        assert np.allclose(U(x), ellis_line_potential(x, 3, 1, 1.0), atol=1e-6)

    def test_tabulated_must_straddle_throat(self):
        w = np.linspace(0.5, 30, 3000)
        with pytest.raises(DomainError):
            line_potential_from_geometry(GeometryProfile.tabulated(w, np.hypot(1.0, w)), 3, 0)

    def test_half_line_geometry_rejected(self):
        with pytest.raises(DomainError):
            line_potential_from_geometry(GeometryProfile.flat(), 3, 0)


class TestNumerics:
    def test_numerov_wavenumber_limit(self):
        assert numerov_wavenumber(1.0, 1e-6) == pytest.approx(1.0, rel=1e-12)

    def test_numerov_wavenumber_dispersion(self):
        k, h = 2.0, 0.1
        q = numerov_wavenumber(k, h)
        x = (k * h) ** 2
        assert math.cos(q * h) == pytest.approx((1 - 5 * x / 12) / (1 + x / 12), rel=1e-15)

    def test_auto_step(self):
        num = auto_numerics(ellis_potential(3, 0), 4.0)
        assert num.h == pytest.approx(min(0.05 / 2.0, 1.0 / 50))

    def test_window_rule(self):
        U = ellis_potential(3, 1)
        w = window_halfwidth(U, 1.0)
        probe = np.array([w, 2 * w, 5 * w])
        assert np.all(np.abs(U.remainder(probe)) <= 1e-10)

    def test_resolution_error(self):
        with pytest.raises(ResolutionError):
            solve_scattering(zero_potential(), 100.0, Numerics(h=0.1, w_max=5.0))

    def test_bad_energy(self):
        with pytest.raises(DomainError):
            solve_scattering(zero_potential(), 0.0)

    @pytest.mark.parametrize("kw", [{"h": 0.0, "w_max": 1.0}, {"h": 0.1, "w_max": -1.0}])
    def test_numerics_validation(self, kw):
        with pytest.raises(ValueError):
            Numerics(**kw)


class TestScattering:
    @pytest.mark.parametrize("eps", [0.01, 1.0, 25.0])
    def test_free_line(self, eps):
        a = solve_scattering(zero_potential(), eps)
        assert abs(abs(a.t) - 1) <= 1e-8
        assert abs(a.r) <= 1e-8

    @pytest.mark.parametrize("eps", [0.3, 0.9, 1.5, 4.0])
    def test_square_barrier_oracles(self, eps):
        t_ex, r_ex = barrier_amplitudes(1.0, 1.0, eps)
        assert abs(t_ex) ** 2 == pytest.approx(textbook_transmission(1.0, 1.0, eps), rel=1e-12)
        a = solve_scattering(square_barrier(1.0, 1.0), eps, Numerics(0.005, 5.0))
        assert abs(a.t - t_ex) <= 1e-6
        assert abs(a.r - r_ex) <= 1e-6
        assert a.transmission == pytest.approx(textbook_transmission(1.0, 1.0, eps), abs=1e-6)

    def test_fourth_order_convergence(self):
        t_ex, r_ex = barrier_amplitudes(1.0, 1.0, 2.0)
        hs = np.array([0.04, 0.02, 0.01, 0.005])
        errs = []
        for h in hs:
            a = solve_scattering(square_barrier(1.0, 1.0), 2.0, Numerics(h, 5.0))
            errs.append(abs(a.t - t_ex) + abs(a.r - r_ex))
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert 3.5 <= slope <= 4.5

    def test_ellis_unitarity(self):
        a = solve_scattering(ellis_potential(3, 0), 1.0)
        assert abs(a.flux_defect) <= 1e-6
        assert a.transmission > 0

    def test_ellis_fine_step_oracle(self):
        U = ellis_potential(3, 0)
        a = solve_scattering(U, 1.0)
        b = solve_scattering(U, 1.0, Numerics(a.numerics.h / 4, a.numerics.w_max))
        assert abs(a.t - b.t) <= 1e-6 and abs(a.r - b.r) <= 1e-6

    def test_left_right_symmetry(self):
        U = ellis_potential(3, 1)
        a = solve_scattering(U, 2.0)
        b = solve_scattering(U, 2.0, incident="left")
        assert abs(a.t) == pytest.approx(abs(b.t), rel=1e-10)

    def test_asymmetric_reciprocity(self):
        # transmission amplitude is the same from both sides even for an asymmetric potential
        U = LinePotential(lambda w: 2.0 * np.exp(-((np.asarray(w) - 0.5) ** 2)) * (1 + 0.3 * np.tanh(np.asarray(w))),
                          support_halfwidth=8.0, length_scale=0.5)
        a = solve_scattering(U, 1.2)
        b = solve_scattering(U, 1.2, incident="left")
        assert a.t == pytest.approx(b.t, abs=1e-9)
        assert abs(a.r) == pytest.approx(abs(b.r), abs=1e-9)

    @pytest.mark.parametrize("eps", [0.5, 16.0])
    def test_breakpoints_without_jump_are_transparent(self, eps):
        a = solve_scattering(square_barrier(0.0, 1.0), eps, Numerics(0.01, 5.0))
        assert abs(a.r) <= 1e-9 and abs(a.flux_defect) <= 1e-12

    def test_below_barrier_warns(self):
        with pytest.warns(BelowBarrierWarning):
            solve_scattering(square_barrier(2.0, 1.0), 1.0, Numerics(0.01, 5.0))

    @settings(max_examples=25, deadline=None)
    @given(st.floats(min_value=0.05, max_value=30.0), st.floats(min_value=-2.0, max_value=4.0),
           st.floats(min_value=0.2, max_value=2.0))
    def test_barrier_unitarity_and_oracle(self, eps, U0, a):
        assume(abs(eps - U0) > 1e-3)  # the matching oracle degenerates at eps = U0
        t_ex, r_ex = barrier_amplitudes(U0, a, eps)
        num = Numerics(min(0.01, 0.05 / math.sqrt(eps + abs(U0))), a + 4.0)
        s = solve_scattering(square_barrier(U0, a), eps, num)
        assert abs(s.flux_defect) <= 1e-9
        assert abs(s.t - t_ex) <= 1e-5


class TestSweep:
    def test_free_line_eta_zero(self):
        rec = phase_shift_sweep(zero_potential(), np.geomspace(0.1, 10, 8))
        assert np.all(rec.eta <= 1e-8)
        assert np.all(rec.delta == 0.0)

    def test_ellis_sweep(self):
        eps = np.geomspace(0.01, 100, 20)
        rec = phase_shift_sweep(ellis_potential(3, 0), eps)
        assert np.all(rec.eta <= 1 + 1e-9)
        assert rec.eta[-1] < rec.eta[0]
        # Argand points lie in the unitarity disc |z - i/2| <= 1/2
        assert np.all(np.abs(rec.argand - 0.5j) <= 0.5 + 1e-9)

    def test_parallel_matches_serial(self):
        eps = np.geomspace(0.1, 10, 12)
        U = ellis_potential(3, 1)
        a = phase_shift_sweep(U, eps)
        b = phase_shift_sweep(U, eps, jobs=4)
        assert np.array_equal(a.eta, b.eta) and np.array_equal(a.delta, b.delta)

    def test_argand_definition(self):
        rec = phase_shift_sweep(ellis_potential(3, 0), np.array([0.5, 1.0, 2.0]))
        r = np.array([x.r for x in rec.amplitudes])
        assert np.allclose(rec.argand, (r - 1) / 2j, atol=1e-14)

    @pytest.mark.parametrize("grid", [[], [1.0, 0.5], [-1.0, 1.0]])
    def test_bad_grid(self, grid):
        with pytest.raises(ValueError):
            phase_shift_sweep(zero_potential(), grid)
