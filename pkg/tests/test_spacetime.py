import math

import numpy as np
import pytest

from paththerm import (NATURAL, Grid1D, Constant, Free, Harmonic, Path,
                       Tabulated, UnitSystem, InvalidArgumentError,
                       eval_potential, make_lattice, sample_closed_bridge,
                       sample_lattice_walk, sample_pinned_bridges,
                       sample_walk_displacements)

from conftest import rel_err


# --- lattice ---------------------------------------------------------------

@pytest.mark.parametrize("hbar,mass,dx,expected_dt", [
    (1.0, 1.0, 1.0, 1.0),
    (1.0, 2.0, 1.0, 2.0),
    (1.0, 1.0, 0.1, 0.01),
])
def test_make_lattice_examples(hbar, mass, dx, expected_dt):
    lat = make_lattice(UnitSystem(hbar=hbar, mass=mass), dx)
    assert lat.dt == pytest.approx(expected_dt, rel=1e-15)


@pytest.mark.parametrize("units", [
    UnitSystem(), UnitSystem(hbar=2.5, mass=0.7, kB=3.0), UnitSystem(hbar=0.3, mass=11.0),
])
def test_lattice_uncertainty_identities(units):
    lat = make_lattice(units, 0.37)
    # dt*hbar = m*dx^2 to machine precision of the construction
    assert math.isclose(lat.dt * units.hbar, units.mass * lat.dx**2, rel_tol=2**-50)
    # dx * (m dx/dt) = hbar
    assert lat.dx * units.mass * lat.dx / lat.dt == pytest.approx(units.hbar, rel=1e-14)
    # (dt/2) * m (dx/dt)^2 = hbar/2
    assert 0.5 * lat.dt * units.mass * (lat.dx / lat.dt) ** 2 == pytest.approx(
        units.hbar / 2, rel=1e-14)


def test_make_lattice_rejects_bad_dx():
    with pytest.raises(InvalidArgumentError):
        make_lattice(NATURAL, 0.0)
    with pytest.raises(InvalidArgumentError):
        make_lattice(NATURAL, -1.0)


def test_unit_system_positive():
    with pytest.raises(InvalidArgumentError):
        UnitSystem(hbar=0.0)
    with pytest.raises(InvalidArgumentError):
        UnitSystem(mass=-1.0)


# --- potentials ------------------------------------------------------------

def test_harmonic_examples():
    u = Harmonic(omega=1.0, center=0.0, mass=1.0)
    assert eval_potential(u, 0.0) == 0.0
    assert eval_potential(u, 1.0) == pytest.approx(0.5)
    assert eval_potential(Free(), 12.3) == 0.0
    assert eval_potential(Constant(c=-2.0), 5.0) == -2.0


def test_harmonic_validates_omega():
    with pytest.raises(InvalidArgumentError):
        Harmonic(omega=0.0)


def test_tabulated_interpolation_and_clamping():
    u = Tabulated([0.0, 1.0, 2.0], [0.0, 2.0, 0.0])
    assert eval_potential(u, 0.5) == pytest.approx(1.0)
    assert eval_potential(u, -5.0) == 0.0  # clamped left
    assert eval_potential(u, 9.0) == 0.0   # clamped right
    vals = u(np.array([0.25, 1.75]))
    assert vals == pytest.approx([0.5, 0.5])


def test_tabulated_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        Tabulated([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        Tabulated([0.0, 1.0], [np.inf, 0.0])


# --- grid and paths ----------------------------------------------------------

def test_grid_geometry():
    g = Grid1D(-1.0, 3.0, 8)
    assert g.h == pytest.approx(0.5)
    assert g.length == pytest.approx(4.0)
    assert g.centers[0] == pytest.approx(-0.75)
    assert g.nearest_cell(-1.0) == 0
    assert g.nearest_cell(3.0) == 7
    with pytest.raises(InvalidArgumentError):
        Grid1D(1.0, 0.0, 8)
    with pytest.raises(InvalidArgumentError):
        Grid1D(0.0, 1.0, 1)
    with pytest.raises(InvalidArgumentError):
        Grid1D(0.0, 1.0, 8, boundary="absorbing")


def test_path_validation():
    with pytest.raises(InvalidArgumentError):
        Path(times=[0.0, 0.0, 1.0], positions=[0.0, 1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        Path(times=[0.0, 1.0], positions=[0.0, 1.0], closed=True)
    p = Path(times=[0.0, 1.0, 2.0], positions=[0.0, 1.0, 0.0], closed=True)
    assert len(p) == 3 and p.duration == 2.0


# --- lattice walk ------------------------------------------------------------

def test_walk_degenerate_and_steps():
    lat = make_lattice(NATURAL, 0.5)
    p = sample_lattice_walk(lat, 0, x0=1.5, rng=0)
    assert len(p) == 1 and p.positions[0] == 1.5
    p = sample_lattice_walk(lat, 200, x0=0.0, rng=0)
    incr = np.diff(p.positions)
    assert set(np.round(incr, 12)) <= {0.5, -0.5}
    assert p.duration == pytest.approx(200 * lat.dt)
    with pytest.raises(InvalidArgumentError):
        sample_lattice_walk(lat, -1, 0.0, rng=0)


def test_walk_deterministic_for_seed():
    lat = make_lattice(NATURAL, 1.0)
    p1 = sample_lattice_walk(lat, 50, 0.0, rng=123)
    p2 = sample_lattice_walk(lat, 50, 0.0, rng=123)
    assert np.array_equal(p1.positions, p2.positions)


def test_walk_mean_and_variance():
    units = UnitSystem(hbar=1.3, mass=0.8)
    lat = make_lattice(units, 0.2)
    n_steps, n_walks = 100, 100_000
    disp = sample_walk_displacements(lat, n_steps, n_walks, rng=42)
    # symmetric-walk oracle: mean zero within 3 standard errors
    se = disp.std(ddof=1) / math.sqrt(n_walks)
    assert abs(disp.mean()) < 3 * se
    # variance 2 D t with D = hbar/2m
    t = n_steps * lat.dt
    assert rel_err(disp.var(ddof=1), 2 * units.D * t) < 0.02


def test_walk_displacements_match_single_walk_draws():
    lat = make_lattice(NATURAL, 1.0)
    d = sample_walk_displacements(lat, 30, 5, rng=7)
    walks = [sample_lattice_walk(lat, 30, 0.0, rng=7)]
    # first chunk of the ensemble consumes the same stream as single walks
    assert d[0] == walks[0].positions[-1] - walks[0].positions[0]


# --- closed/pinned bridges ---------------------------------------------------

def test_bridge_pinning_exact():
    p = sample_closed_bridge(NATURAL, x0=2.0, tau=1.0, n_steps=16, rng=5)
    assert p.closed
    assert p.positions[0] == 2.0 and p.positions[-1] == 2.0
    with pytest.raises(InvalidArgumentError):
        sample_closed_bridge(NATURAL, 0.0, -1.0, 16, rng=0)
    with pytest.raises(InvalidArgumentError):
        sample_closed_bridge(NATURAL, 0.0, 1.0, 1, rng=0)


def test_bridge_deterministic_for_seed():
    a = sample_closed_bridge(NATURAL, 0.0, 1.0, 32, rng=99)
    b = sample_closed_bridge(NATURAL, 0.0, 1.0, 32, rng=99)
    assert np.array_equal(a.positions, b.positions)


@pytest.mark.parametrize("units,tau", [(NATURAL, 1.0), (UnitSystem(hbar=2.0, mass=0.5), 0.7)])
def test_bridge_variance_profile(units, tau):
    n_steps, n_paths = 8, 200_000
    pos = sample_pinned_bridges(units, 0.0, 0.0, tau, n_steps, n_paths, rng=1)
    s = np.linspace(0.0, tau, n_steps + 1)
    for i in (2, 4, 5):
        expected = 2 * units.D * s[i] * (tau - s[i]) / tau
        assert rel_err(pos[:, i].var(ddof=1), expected) < 0.02


def test_bridge_midpoint_variance_two_steps():
    tau = 2.0
    pos = sample_pinned_bridges(NATURAL, 0.0, 0.0, tau, 2, 300_000, rng=3)
    assert rel_err(pos[:, 1].var(ddof=1), NATURAL.D * tau / 2) < 0.02


def test_pinned_bridge_endpoints_and_mean():
    pos = sample_pinned_bridges(NATURAL, -1.0, 2.0, 1.0, 8, 50_000, rng=11)
    assert np.all(pos[:, 0] == -1.0) and np.all(pos[:, -1] == 2.0)
    s = np.linspace(0, 1, 9)
    line = -1.0 + 3.0 * s
    assert np.max(np.abs(pos.mean(axis=0) - line)) < 0.01


def test_walk_displacement_gaussianity():
    # CLT check at the spec's scale: n_steps = 1e4, ensemble 1e5
    lat = make_lattice(NATURAL, 1.0)
    disp = sample_walk_displacements(lat, 10_000, 100_000, rng=8)
    z = (disp - disp.mean()) / disp.std(ddof=1)
    skew = np.mean(z**3)
    ex_kurt = np.mean(z**4) - 3.0
    assert abs(skew) < 0.05
    assert abs(ex_kurt) < 0.1
