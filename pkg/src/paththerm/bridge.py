"""Entry-exit construction: paired forward/backward solutions and their wave form.

Fixing phi0 at t0 and phihat1 at t1 (with unit pairing integral) defines a
Markov process whose marginal is mu = phi*phihat.  From the pair one reads off
dual transition densities p and phat, the drifts a = (hbar/m) d ln phi/dx and
ahat = (hbar/m) d ln phihat/dx, the phase fields R and S and the complex field
Psi = exp(R + iS) with |Psi|^2 = mu.  The module also verifies, numerically,
the continuity equation for mu and the complex evolution equation for Psi with
its transformed potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diffusion import (Field, Kernel, _TrapezoidalStepper, evolve_forward,
                        gradient, kernel, laplacian_values)
from .errors import InfeasiblePairError, InvalidArgumentError, NumericalFailureError
from .spacetime import NATURAL, Grid1D, Path, Potential, UnitSystem, as_generator

__all__ = [
    "EntryExit",
    "BridgeSystem",
    "PathEnsemble",
    "normalize_entry_exit",
    "build_bridge",
    "transition_densities",
    "continuity_residual",
    "schrodinger_residual",
    "sample_bridge_paths",
]

_SUPPORT_FLOOR_REL = 1e-12
_TIME_ATOL = 1e-12


@dataclass(frozen=True)
class EntryExit:
    """Normalized pair: phi0 at t0, phihat1 at t1, shared potential."""

    phi0: Field
    phihat1: Field
    u: Potential
    dt_solver: float
    pairing: float = 1.0


@dataclass(frozen=True)
class PathEnsemble:
    """Sampled bridge paths, one row of cell-center positions per path."""

    times: np.ndarray
    positions: np.ndarray

    def __len__(self) -> int:
        return self.positions.shape[0]

    def __getitem__(self, i: int) -> Path:
        return Path(times=self.times, positions=self.positions[i])


@dataclass(frozen=True)
class BridgeSystem:
    """Snapshot stack of the entry-exit process on a uniform time grid.

    Arrays are (n_snapshots, n_cells).  Log-derived fields (a, ahat, R, S,
    psi) are NaN outside `support`, the cells where both phi and phihat
    exceed 1e-12 of their snapshot maxima; nothing is extrapolated there.
    """

    grid: Grid1D
    units: UnitSystem
    u: Potential
    times: np.ndarray
    dt_solver: float
    phi: np.ndarray
    phihat: np.ndarray
    mu: np.ndarray
    a: np.ndarray
    ahat: np.ndarray
    R: np.ndarray
    S: np.ndarray
    psi: np.ndarray
    support: np.ndarray

    @property
    def n_snapshots(self) -> int:
        return self.times.size

    def snapshot_index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise InvalidArgumentError(f"t = {t} is not a snapshot time")
        return i


def _pairing_integral(phi0: Field, phihat1: Field, u, dt_solver: float,
                      units: UnitSystem) -> float:
    """int phi0(y) q(t0, y; t1, x) phihat1(x) dy dx via one forward sweep."""
    pushed = evolve_forward(phi0, u, phihat1.t, dt_solver, units)
    return float(np.sum(pushed.values * phihat1.values) * phi0.grid.h)


def normalize_entry_exit(phi0: Field, phihat1: Field, u: Potential,
                         dt_solver: float, units: UnitSystem = NATURAL) -> EntryExit:
    """Rescale phihat1 so the pairing integral equals one.

    Raises InfeasiblePairError when the pairing is numerically zero (supports
    out of diffusive reach over t1 - t0).
    """
    if phi0.grid != phihat1.grid:
        raise InvalidArgumentError("entry and exit fields live on different grids")
    if not phihat1.t - phi0.t > 0:
        raise InvalidArgumentError("phihat1 must sit at a later time than phi0")
    if np.any(phi0.values < 0) or np.any(phihat1.values < 0):
        raise InvalidArgumentError("entry and exit fields must be non-negative")
    if not (phi0.values.max() > 0 and phihat1.values.max() > 0):
        raise InvalidArgumentError("entry and exit fields must not be identically zero")
    c = _pairing_integral(phi0, phihat1, u, dt_solver, units)
    if not c > 1e-300:
        raise InfeasiblePairError(
            f"pairing integral is {c:.3g}; the pair has no diffusive overlap")
    scaled = Field(phihat1.grid, phihat1.t, phihat1.values / c)
    return EntryExit(phi0=phi0, phihat1=scaled, u=u, dt_solver=dt_solver, pairing=1.0)


def build_bridge(ee: EntryExit, n_snapshots: int = 129,
                 units: UnitSystem = NATURAL) -> BridgeSystem:
    """Evolve phi forward and phihat backward, assembling all derived fields.

    Snapshots are uniform on [t0, t1]; each interval is covered by the same
    number of trapezoidal steps, so the one-step propagator is shared and the
    pairing sum phi.phihat*h is conserved across snapshots to round-off.
    """
    if n_snapshots < 2:
        raise InvalidArgumentError("need at least 2 snapshots")
    grid = ee.phi0.grid
    t0, t1 = ee.phi0.t, ee.phihat1.t
    c = _pairing_integral(ee.phi0, ee.phihat1, ee.u, ee.dt_solver, units)
    if abs(c - 1.0) > 1e-6:
        raise InvalidArgumentError(
            f"entry-exit pair is not normalized (pairing = {c:.9g}); "
            "run normalize_entry_exit first")
    times = np.linspace(t0, t1, n_snapshots)
    interval = times[1] - times[0]
    k = max(1, math.ceil(interval / ee.dt_solver - 1e-12))
    dt = interval / k
    stepper = _TrapezoidalStepper(grid, ee.u, units, dt)

    n = grid.n_cells
    phi = np.empty((n_snapshots, n))
    phihat = np.empty((n_snapshots, n))
    phi[0] = ee.phi0.values
    for i in range(1, n_snapshots):
        x = phi[i - 1].copy()
        for _ in range(k):
            x = stepper.step(x)
        phi[i] = x
    phihat[-1] = ee.phihat1.values
    for i in range(n_snapshots - 2, -1, -1):
        x = phihat[i + 1].copy()
        for _ in range(k):
            x = stepper.step(x)
        phihat[i] = x
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(phihat))):
        raise NumericalFailureError("bridge sweep produced non-finite fields")

    mu = phi * phihat
    masses = mu.sum(axis=1) * grid.h
    if np.any(np.abs(masses - 1.0) > 1e-6):
        worst = int(np.argmax(np.abs(masses - 1.0)))
        raise NumericalFailureError(
            f"mu mass drifted to {masses[worst]:.9g} at t = {times[worst]:.6g}")

    support = ((phi > _SUPPORT_FLOOR_REL * phi.max(axis=1, keepdims=True))
               & (phihat > _SUPPORT_FLOOR_REL * phihat.max(axis=1, keepdims=True)))
    log_phi = np.where(support, np.log(np.where(support, phi, 1.0)), np.nan)
    log_phihat = np.where(support, np.log(np.where(support, phihat, 1.0)), np.nan)
    coef = units.hbar / units.mass
    a = np.empty_like(phi)
    ahat = np.empty_like(phi)
    for i in range(n_snapshots):
        a[i] = coef * gradient(log_phi[i], grid)
        ahat[i] = coef * gradient(log_phihat[i], grid)
    R = 0.5 * (log_phi + log_phihat)
    S = 0.5 * (log_phihat - log_phi)
    psi = np.where(support, np.exp(R + 1j * S), np.nan + 0j)

    return BridgeSystem(grid=grid, units=units, u=ee.u, times=times, dt_solver=dt,
                        phi=phi, phihat=phihat, mu=mu, a=a, ahat=ahat,
                        R=R, S=S, psi=psi, support=support)


def transition_densities(bs: BridgeSystem, s: float, t: float) -> tuple[Kernel, Kernel]:
    """Dual transition densities between two snapshot times.

    p(s, y; t, x) = phi(s, y) q(s, y; t, x) / phi(t, x) where phi(t, x) is
    above the support floor, zero otherwise; phat divides by phihat(s, y)
    instead.  Rows of phat and columns of p integrate to one on the support.
    """
    i, j = bs.snapshot_index(s), bs.snapshot_index(t)
    if not i < j:
        raise InvalidArgumentError("need s < t among the snapshot times")
    q = kernel(bs.grid, bs.u, float(bs.times[i]), float(bs.times[j]),
               bs.dt_solver, bs.units).entries
    phi_s, phi_t = bs.phi[i], bs.phi[j]
    phihat_s, phihat_t = bs.phihat[i], bs.phihat[j]
    ok_t = phi_t > _SUPPORT_FLOOR_REL * phi_t.max()
    ok_s = phihat_s > _SUPPORT_FLOOR_REL * phihat_s.max()
    p = np.where(ok_t[None, :], phi_s[:, None] * q / np.where(ok_t, phi_t, 1.0)[None, :], 0.0)
    phat = np.where(ok_s[:, None], q * phihat_t[None, :] / np.where(ok_s, phihat_s, 1.0)[:, None], 0.0)
    t0, t1 = float(bs.times[i]), float(bs.times[j])
    return (Kernel(grid=bs.grid, t0=t0, t1=t1, entries=p),
            Kernel(grid=bs.grid, t0=t0, t1=t1, entries=phat))


def continuity_residual(bs: BridgeSystem) -> tuple[np.ndarray, np.ndarray]:
    """L2 residual of d(mu)/dt + d/dx[((ahat - a)/2) mu] at interior snapshots.

    The flux is evaluated as (hbar/2m)(phi d(phihat)/dx - phihat d(phi)/dx),
    which equals ((ahat - a)/2) mu wherever the drifts are defined but stays
    finite everywhere.
    """
    if bs.n_snapshots < 3:
        raise InvalidArgumentError("need at least 3 snapshots for the residual")
    dt = bs.times[1] - bs.times[0]
    coef = bs.units.D
    norms = np.empty(bs.n_snapshots - 2)
    for m, i in enumerate(range(1, bs.n_snapshots - 1)):
        flux = coef * (bs.phi[i] * gradient(bs.phihat[i], bs.grid)
                       - bs.phihat[i] * gradient(bs.phi[i], bs.grid))
        r = (bs.mu[i + 1] - bs.mu[i - 1]) / (2.0 * dt) + gradient(flux, bs.grid)
        norms[m] = math.sqrt(float(np.sum(r**2) * bs.grid.h))
    return bs.times[1:-1].copy(), norms


def schrodinger_residual(bs: BridgeSystem, u: Potential | None = None
                         ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Transformed potential V and the complex evolution residual per snapshot.

    V = u - 2 hbar (dS/dt + D (dS/dx)^2) from the stored phase; the residual is
    i hbar dPsi/dt + (hbar^2/2m) Lap(Psi) - V Psi with centered differences,
    reduced over the cells where every stencil value is defined.  Returns
    (V, interior times, L2 norms); V rows for the end snapshots are NaN.
    """
    if bs.n_snapshots < 3:
        raise InvalidArgumentError("need at least 3 snapshots for the residual")
    u = bs.u if u is None else u
    units = bs.units
    dt = bs.times[1] - bs.times[0]
    n_t = bs.n_snapshots
    u_vals = np.asarray(u(bs.grid.centers), dtype=float)
    V = np.full_like(bs.S, np.nan)
    norms = np.empty(n_t - 2)
    for m, i in enumerate(range(1, n_t - 1)):
        s_t = (bs.S[i + 1] - bs.S[i - 1]) / (2.0 * dt)
        grad_s = gradient(bs.S[i], bs.grid)
        V[i] = u_vals - 2.0 * units.hbar * (s_t + units.D * grad_s**2)
        psi_t = (bs.psi[i + 1] - bs.psi[i - 1]) / (2.0 * dt)
        lap_psi = laplacian_values(bs.psi[i], bs.grid)
        r = (1j * units.hbar * psi_t
             + (units.hbar**2 / (2.0 * units.mass)) * lap_psi
             - V[i] * bs.psi[i])
        ok = np.isfinite(r)
        norms[m] = math.sqrt(float(np.sum(np.abs(r[ok])**2) * bs.grid.h))
    return V, bs.times[1:-1].copy(), norms


def sample_bridge_paths(bs: BridgeSystem, n_paths: int, rng) -> PathEnsemble:
    """Draw paths from the Kolmogorov representation: x(t0) ~ mu(t0), steps by phat.

    States are grid cells; returned positions are cell centers.  The exact
    propagation identity mu(t_{k+1}) = mu(t_k) phat makes the empirical
    marginal at every snapshot converge to mu.
    """
    if n_paths < 1:
        raise InvalidArgumentError("n_paths must be positive")
    rng = as_generator(rng)
    grid = bs.grid
    n = grid.n_cells
    h = grid.h
    q = kernel(grid, bs.u, float(bs.times[0]), float(bs.times[1]),
               bs.dt_solver, bs.units).entries

    p0 = np.clip(bs.mu[0] * h, 0.0, None)
    p0 /= p0.sum()
    cells = rng.choice(n, size=n_paths, p=p0)
    out = np.empty((n_paths, bs.n_snapshots), dtype=np.int64)
    out[:, 0] = cells
    for i in range(bs.n_snapshots - 1):
        # transition probabilities T[y, x] = q[y, x] h phihat_{i+1}[x] / phihat_i[y]
        denom = np.where(bs.phihat[i] > 0, bs.phihat[i], 1.0)
        T = np.clip(q * h * bs.phihat[i + 1][None, :] / denom[:, None], 0.0, None)
        row_sums = T.sum(axis=1, keepdims=True)
        T /= np.where(row_sums > 0, row_sums, 1.0)
        cum = np.cumsum(T, axis=1)
        draws = rng.random(n_paths)
        nxt = np.empty(n_paths, dtype=np.int64)
        for cell in np.unique(out[:, i]):
            sel = out[:, i] == cell
            nxt[sel] = np.searchsorted(cum[cell], draws[sel], side="right")
        out[:, i + 1] = np.minimum(nxt, n - 1)
    return PathEnsemble(times=bs.times.copy(), positions=grid.centers[out])
