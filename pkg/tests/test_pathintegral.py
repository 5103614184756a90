import math

import numpy as np
import pytest

from paththerm import (NATURAL, Constant, Free, Grid1D, Harmonic,
                       InvalidArgumentError, Path, PrecisionFailureError,
                       UnitSystem, make_lattice, sample_lattice_walk)
from paththerm.analytic import free_kernel, ln_z_path, mehler_kernel
from paththerm.pathintegral import (MCEstimate, action, dlnz_dtau,
                                    estimate_q_mc, quadrature_points, z_path)

from conftest import rel_err


# --- action -------------------------------------------------------------------

def test_action_trivial_cases():
    flat = Path(times=[0.0, 1.0, 2.0], positions=[1.0, 1.0, 1.0])
    assert action(flat, Free()).value == 0.0
    one_step = Path(times=[0.0, 1.0], positions=[0.0, 1.0])
    assert action(one_step, Free()).value == pytest.approx(0.5)
    with pytest.raises(InvalidArgumentError):
        action(Path(times=[0.0], positions=[0.0]), Free())


@pytest.mark.parametrize("units", [NATURAL, UnitSystem(hbar=2.0, mass=0.4)])
def test_lattice_walk_action_is_half_hbar_per_step(units):
    lat = make_lattice(units, 0.3)
    n = 57
    walk = sample_lattice_walk(lat, n, 0.0, rng=4)
    a = action(walk, Free(), units)
    assert rel_err(a.value, n * units.hbar / 2) < 1e-12


def test_action_trapezoidal_potential_term():
    # constant potential on a flat path: action = c * duration
    p = Path(times=[0.0, 0.5, 2.0], positions=[0.0, 0.0, 0.0])
    assert action(p, Constant(3.0)).value == pytest.approx(6.0)
    # harmonic on a two-point path: (u(x0)+u(x1))/2 * dt + kinetic
    p = Path(times=[0.0, 1.0], positions=[0.0, 2.0])
    expected = 0.5 * 2.0**2 / 1.0 + 0.5 * (0.0 + 2.0)
    assert action(p, Harmonic(omega=1.0)).value == pytest.approx(expected)


def test_action_nonnegative_for_nonnegative_potential():
    lat = make_lattice(NATURAL, 0.5)
    for seed in range(5):
        w = sample_lattice_walk(lat, 40, 0.0, rng=seed)
        assert action(w, Harmonic(omega=1.0)).value >= 0.0


# --- q estimator -----------------------------------------------------------------

def test_q_mc_free_is_exact_with_zero_error():
    est = estimate_q_mc(0.2, -0.4, 0.7, Free(), n_paths=100, n_steps=8, rng=0)
    assert est.std_error == 0.0
    assert rel_err(est.mean, float(free_kernel(0.2, -0.4, 0.7, NATURAL))) < 1e-14


def test_q_mc_constant_factorization():
    units = UnitSystem(hbar=1.5, mass=0.9)
    est = estimate_q_mc(0.0, 0.3, 0.6, Constant(2.0), n_paths=100, n_steps=16,
                        rng=1, units=units)
    expected = float(free_kernel(0.0, 0.3, 0.6, units)) * math.exp(-2.0 * 0.6 / units.hbar)
    assert rel_err(est.mean, expected) < 1e-10
    assert est.std_error < 1e-12 * abs(est.mean)


def test_q_mc_harmonic_matches_mehler_diagonal():
    est = estimate_q_mc(0.0, 0.0, 1.0, Harmonic(omega=1.0), n_paths=100_000,
                        n_steps=64, rng=2)
    oracle = float(mehler_kernel(0.0, 0.0, 1.0, 1.0, NATURAL))
    assert rel_err(est.mean, oracle) < 0.01
    assert abs(est.mean - oracle) < 4 * est.std_error + 3e-4 * oracle


def test_q_mc_validation_and_weight_positivity():
    with pytest.raises(InvalidArgumentError):
        estimate_q_mc(0.0, 0.0, -1.0, Free(), 10, 8, rng=0)
    with pytest.raises(InvalidArgumentError):
        estimate_q_mc(0.0, 0.0, 1.0, Free(), 1, 8, rng=0)
    # real measure: estimates stay positive even for rough potentials
    est = estimate_q_mc(0.0, 0.0, 1.0, Constant(-4.0), 500, 16, rng=3)
    assert est.mean > 0


def test_mc_estimate_invariants():
    with pytest.raises(InvalidArgumentError):
        MCEstimate(mean=0.0, std_error=-1.0, n_samples=10)
    with pytest.raises(InvalidArgumentError):
        MCEstimate(mean=0.0, std_error=0.0, n_samples=1)


def test_kinetic_identity_on_free_bridges():
    # E[(dx)^2] = 2 D dt (1 - dt/tau) exactly for the free bridge, hence
    # (m/2) <(dx/dt)^2> = hbar/(2 dt) - hbar/(2 tau)
    from paththerm import sample_pinned_bridges
    units = UnitSystem(hbar=1.7, mass=0.8)
    tau, n_steps = 1.3, 16
    dt = tau / n_steps
    pos = sample_pinned_bridges(units, 0.0, 0.0, tau, n_steps, 400_000, rng=5)
    msq = np.diff(pos, axis=1) ** 2
    expected = 2 * units.D * dt * (1 - dt / tau)
    sample = msq.mean()
    se = msq.mean(axis=1).std(ddof=1) / math.sqrt(pos.shape[0])
    assert abs(sample - expected) < 3 * se
    kinetic = 0.5 * units.mass * sample / dt**2
    target = units.hbar / (2 * dt) - units.hbar / (2 * tau)
    assert rel_err(kinetic, target) < 0.01


# --- closed-path count ------------------------------------------------------------

def test_z_path_free_closed_form():
    units = UnitSystem(hbar=1.2, mass=2.0)
    grid = Grid1D(-1.0, 2.0, 64)
    tau = 0.8
    est = z_path(Free(), grid, tau, n_paths=50, n_steps=8, rng=0, units=units,
                 quad_points=32)
    expected = grid.length * math.sqrt(units.mass / (2 * math.pi * units.hbar * tau))
    assert est.std_error == 0.0
    assert rel_err(est.mean, expected) < 0.005


def test_z_path_constant_factorization():
    grid = Grid1D(0.0, 1.0, 32)
    tau, c = 0.5, 1.3
    est_free = z_path(Free(), grid, tau, 50, 8, rng=0, quad_points=16)
    est_c = z_path(Constant(c), grid, tau, 50, 8, rng=0, quad_points=16)
    assert rel_err(est_c.mean, est_free.mean * math.exp(-c * tau)) < 1e-12


def test_z_path_harmonic_trace():
    grid = Grid1D(-8.0, 8.0, 64)
    est = z_path(Harmonic(omega=1.0), grid, 1.0, n_paths=20_000, n_steps=64,
                 rng=5, quad_points=64)
    expected = 1.0 / (2 * math.sinh(0.5))
    assert rel_err(est.mean, expected) < 0.02
    assert abs(est.mean - expected) < 4 * est.std_error + 1e-3 * expected


def test_ln_z_additivity_for_independent_systems():
    # joint closed-path count of two independent boxes factorizes
    grid_a = Grid1D(0.0, 1.0, 32)
    grid_b = Grid1D(0.0, 2.0, 32)
    tau = 0.6
    za = z_path(Constant(0.5), grid_a, tau, 2000, 16, rng=11, quad_points=16)
    zb = z_path(Free(), grid_b, tau, 2000, 16, rng=12, quad_points=16)
    ln_joint = math.log(za.mean) + math.log(zb.mean)
    expected = (ln_z_path(Constant(0.5), grid_a, tau, NATURAL)
                + ln_z_path(Free(), grid_b, tau, NATURAL))
    se_ln = za.std_error / za.mean + zb.std_error / zb.mean
    assert abs(ln_joint - expected) < 3 * se_ln + 1e-4


def test_quadrature_points_cover_box():
    grid = Grid1D(-1.0, 3.0, 10)
    x, w = quadrature_points(grid, 8)
    assert w == pytest.approx(0.5)
    assert x[0] == pytest.approx(-0.75) and x[-1] == pytest.approx(2.75)


# --- window derivative --------------------------------------------------------------

def test_dlnz_free_is_exact():
    grid = Grid1D(0.0, 1.0, 32)
    est = dlnz_dtau(Free(), grid, 2.0, n_paths=50, n_steps=8, rng=0, quad_points=8)
    assert est.std_error == 0.0
    assert rel_err(-NATURAL.hbar * est.mean, NATURAL.hbar / (2 * 2.0)) < 1e-5


def test_dlnz_constant_offset():
    grid = Grid1D(0.0, 1.0, 32)
    c, tau = 0.9, 1.4
    est = dlnz_dtau(Constant(c), grid, tau, n_paths=50, n_steps=8, rng=0, quad_points=8)
    assert rel_err(-est.mean, 1 / (2 * tau) + c) < 1e-5


def test_dlnz_harmonic_common_random_numbers():
    grid = Grid1D(-8.0, 8.0, 64)
    est = dlnz_dtau(Harmonic(omega=1.0), grid, 1.0, n_paths=10_000, n_steps=64,
                    rng=7, quad_points=48)
    expected = 0.5 / math.tanh(0.5)
    assert rel_err(-est.mean, expected) < 0.02
    # CRN keeps the derivative noise far below the level noise
    assert est.std_error < 0.01 * expected


def test_dlnz_precision_guard():
    grid = Grid1D(-8.0, 8.0, 32)
    with pytest.raises(PrecisionFailureError):
        dlnz_dtau(Harmonic(omega=1.0), grid, 1.0, n_paths=200, n_steps=16,
                  rng=0, quad_points=8, se_tol=1e-9)


def test_dlnz_monotone_decreasing_energy():
    # -hbar dlnZ/dtau strictly decreasing over 10 windows, per potential
    grid = Grid1D(-8.0, 8.0, 48)
    taus = np.geomspace(0.3, 3.0, 10)
    for u in (Free(), Constant(0.5), Harmonic(omega=1.0)):
        vals = [-dlnz_dtau(u, grid, float(t), 3000, 32, rng=13, quad_points=24).mean
                for t in taus]
        assert np.all(np.diff(vals) < 0)


def test_reproducibility_same_seed():
    grid = Grid1D(-4.0, 4.0, 32)
    a = z_path(Harmonic(omega=1.0), grid, 0.8, 1000, 16, rng=21, quad_points=8)
    b = z_path(Harmonic(omega=1.0), grid, 0.8, 1000, 16, rng=21, quad_points=8)
    assert a.mean == b.mean and a.std_error == b.std_error
