"""Cross-checks of the closed forms against independent constructions.

The closed forms are themselves used as oracles elsewhere, so here they are
validated against routes that share no code with them: eigenfunction series,
finite-difference residuals of the defining equations, and quadrature.
"""

import math

import numpy as np
import pytest
from scipy.special import eval_hermite, factorial

from paththerm import NATURAL, Constant, Free, Grid1D, Harmonic, UnitSystem
from paththerm.analytic import (energy_infimum, equilibrium_window, free_kernel,
                                has_closed_form, internal_energy, ln_z_path,
                                mehler_kernel)

from conftest import rel_err


def test_free_kernel_normalizes_and_solves_heat_equation():
    units = UnitSystem(hbar=2.0, mass=0.5)
    tau = 0.3
    x = np.linspace(-12, 12, 4001)
    q = free_kernel(0.0, x, tau, units)
    assert np.trapezoid(q, x) == pytest.approx(1.0, abs=1e-10)
    # residual of dq/dtau = D q'' by finite differences at several points
    for x0 in (0.0, 0.7, -1.3):
        dq_dt = (free_kernel(0.0, x0, tau + 1e-6, units)
                 - free_kernel(0.0, x0, tau - 1e-6, units)) / 2e-6
        hh = 1e-4
        lap = (free_kernel(0.0, x0 + hh, tau, units) - 2 * free_kernel(0.0, x0, tau, units)
               + free_kernel(0.0, x0 - hh, tau, units)) / hh**2
        assert dq_dt == pytest.approx(units.D * lap, rel=1e-5, abs=1e-8)


def _oscillator_eigen_sum(x0, x1, tau, n_terms=60):
    # natural units, omega = 1: psi_n(x) = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi))
    total = 0.0
    for n in range(n_terms):
        norm = 1.0 / math.sqrt(2.0**n * float(factorial(n)) * math.sqrt(math.pi))
        psi_x0 = norm * eval_hermite(n, x0) * math.exp(-x0**2 / 2)
        psi_x1 = norm * eval_hermite(n, x1) * math.exp(-x1**2 / 2)
        total += psi_x0 * psi_x1 * math.exp(-(n + 0.5) * tau)
    return total


@pytest.mark.parametrize("x0,x1", [(0.0, 0.0), (0.5, -0.3), (1.2, 1.0), (-1.5, 0.8)])
def test_mehler_matches_eigenfunction_series(x0, x1):
    q = float(mehler_kernel(x0, x1, 0.8, 1.0, NATURAL))
    ref = _oscillator_eigen_sum(x0, x1, 0.8)
    assert rel_err(q, ref) < 1e-12


def test_mehler_free_limit():
    x = np.linspace(-1, 1, 11)
    q_free = free_kernel(0.2, x, 0.5, NATURAL)
    q_small_omega = mehler_kernel(0.2, x, 0.5, 1e-6, NATURAL)
    assert np.max(np.abs(q_small_omega / q_free - 1)) < 1e-9


def test_mehler_solves_weighted_diffusion_nonnatural_units():
    units = UnitSystem(hbar=2.0, mass=0.5)
    omega = 1.3
    u = Harmonic(omega=omega, mass=units.mass)
    tau, x0 = 0.6, 0.4
    for x in (0.0, 0.5, -0.8):
        dq_dt = (mehler_kernel(x0, x, tau + 1e-6, omega, units)
                 - mehler_kernel(x0, x, tau - 1e-6, omega, units)) / 2e-6
        hh = 1e-4
        lap = (mehler_kernel(x0, x + hh, tau, omega, units)
               - 2 * mehler_kernel(x0, x, tau, omega, units)
               + mehler_kernel(x0, x - hh, tau, omega, units)) / hh**2
        rhs = units.D * lap - float(u(x)) / units.hbar * mehler_kernel(x0, x, tau, omega, units)
        assert dq_dt == pytest.approx(rhs, rel=1e-5, abs=1e-8)


def test_mehler_trace_matches_ln_z():
    units = UnitSystem(hbar=1.7, mass=2.2)
    omega, tau = 0.9, 1.1
    x = np.linspace(-20, 20, 20001)
    trace = np.trapezoid(mehler_kernel(x, x, tau, omega, units), x)
    grid = Grid1D(-20.0, 20.0, 64)
    assert rel_err(trace, math.exp(ln_z_path(Harmonic(omega=omega, mass=units.mass),
                                             grid, tau, units))) < 1e-10


def test_free_ln_z_is_box_times_kernel_diagonal():
    units = UnitSystem(hbar=0.8, mass=3.0)
    grid = Grid1D(-1.0, 2.5, 64)
    tau = 0.45
    expected = grid.length * float(free_kernel(0.0, 0.0, tau, units))
    assert rel_err(math.exp(ln_z_path(Free(), grid, tau, units)), expected) < 1e-12


@pytest.mark.parametrize("u", [Free(), Constant(c=0.7), Harmonic(omega=1.4)])
def test_internal_energy_is_minus_hbar_dlnz(u):
    units = UnitSystem(hbar=1.9, mass=0.6)
    if isinstance(u, Harmonic):
        u = Harmonic(omega=u.omega, mass=units.mass)
    grid = Grid1D(-3.0, 3.0, 32)
    tau = 0.8
    eps = 1e-6
    num = -(units.hbar * (ln_z_path(u, grid, tau * (1 + eps), units)
                          - ln_z_path(u, grid, tau * (1 - eps), units))
            / (2 * eps * tau))
    assert rel_err(internal_energy(u, tau, units), num) < 1e-8


@pytest.mark.parametrize("u,U", [
    (Free(), 0.5), (Constant(c=1.0), 1.5), (Harmonic(omega=1.0), 1.2),
])
def test_equilibrium_window_inverts_internal_energy(u, U):
    tau = equilibrium_window(u, U, NATURAL)
    assert rel_err(internal_energy(u, tau, NATURAL), U) < 1e-12


def test_energy_infimum_and_feasibility():
    units = UnitSystem(hbar=2.0)
    assert energy_infimum(Harmonic(omega=1.0), units) == pytest.approx(1.0)
    assert energy_infimum(Constant(c=-3.0), units) == -3.0
    with pytest.raises(Exception):
        equilibrium_window(Harmonic(omega=1.0), 0.9, units)


def test_has_closed_form():
    assert has_closed_form(Free()) and has_closed_form(Constant(0.0))
    assert has_closed_form(Harmonic(omega=1.0))
    from paththerm import Tabulated
    assert not has_closed_form(Tabulated([0.0, 1.0], [0.0, 0.0]))
