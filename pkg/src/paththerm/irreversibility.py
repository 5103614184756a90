"""Relaxation toward uniformity in a closed box and the path velocity statistic.

H(t) = -int phi ln phi dx - ln V vanishes exactly at the uniform state and, by
the Fisher-information identity dH/dt = (hbar/2m) int (phi')^2/phi dx >= 0, can
only grow along free diffusion.  A decrease beyond tolerance is treated as a
solver bug, not a tolerance matter.  On equilibrium closed bridges of duration
tau = beta*hbar the product of adjacent forward/backward velocities averages
to -1/(m beta) for every step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffusion import Field, evolve_forward, gradient
from .errors import InvalidArgumentError, MonotonicityError
from .spacetime import Free, UnitSystem, as_generator, sample_pinned_bridges, substreams

__all__ = [
    "HSeries",
    "VelocityCorrEstimate",
    "h_functional",
    "h_rate",
    "relaxation_experiment",
    "velocity_correlation",
    "closed_path_density",
]

_PHI_FLOOR_REL = 1e-12
_CHUNK = 20_000


@dataclass(frozen=True)
class HSeries:
    """H(t), its production rate and the running total entropy."""

    times: np.ndarray
    H: np.ndarray
    H_rate: np.ndarray
    S_total: np.ndarray
    S_final: float


@dataclass(frozen=True)
class VelocityCorrEstimate:
    delta_t: float
    value: float
    std_error: float
    beta: float
    n_paths: int


def h_functional(phi: Field, V: float | None = None) -> float:
    """-int phi ln phi dx - ln V with the 0 ln 0 = 0 convention.

    phi must be a probability density on the box (mass within 1e-6 of one).
    """
    V = phi.grid.length if V is None else V
    if np.any(phi.values < 0) or abs(phi.mass() - 1.0) > 1e-6:
        raise InvalidArgumentError(
            f"phi is not a probability density (mass = {phi.mass():.9g})")
    v = phi.values
    pos = v > 0
    return float(-np.sum(v[pos] * np.log(v[pos])) * phi.grid.h - math.log(V))


def h_rate(phi: Field, units: UnitSystem) -> float:
    """(hbar/2m) int (phi')^2 / phi dx, centered stencils, mirror ghosts at walls.

    Cells below 1e-12 of the field maximum are excluded; the integrand is
    singular there but integrable, and the exclusion perturbs the value below
    test tolerance.
    """
    v = phi.values
    grad = gradient(v, phi.grid)
    keep = v > _PHI_FLOOR_REL * float(np.max(v))
    integrand = grad[keep] ** 2 / v[keep]
    return float(units.D * np.sum(integrand) * phi.grid.h)


def closed_path_density(tau: float, units: UnitSystem) -> float:
    """Per-point closed-path count gamma(tau) = sqrt(m / (2 pi hbar tau))."""
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    return math.sqrt(units.mass / (2.0 * math.pi * units.hbar * tau))


def relaxation_experiment(phi0: Field, units: UnitSystem, t_end: float,
                          n_snapshots: int, *, tau: float,
                          dt_solver: float | None = None) -> HSeries:
    """Free relaxation in a reflecting box, recording H, dH/dt and S_total(t).

    The potential is switched off for t >= phi0.t; snapshots are uniform on
    [phi0.t, t_end].  S_total(t) = kB*(H(t) + ln V + ln gamma(tau)) with the
    caller's thermal window tau, so it climbs to S_final = kB ln(V gamma(tau)).
    A decrease of H beyond 1e-10*|H(0)| raises MonotonicityError.
    """
    if phi0.grid.boundary != "reflecting":
        raise InvalidArgumentError("the relaxation box must have reflecting walls")
    if n_snapshots < 2:
        raise InvalidArgumentError("need at least 2 snapshots")
    if not t_end > phi0.t:
        raise InvalidArgumentError("t_end must exceed the initial time")
    phi = phi0.normalized()
    times = np.linspace(phi0.t, t_end, n_snapshots)
    dt_snap = times[1] - times[0]
    if dt_solver is None:
        dt_solver = dt_snap / 8.0
    V = phi.grid.length
    gamma = closed_path_density(tau, units)

    H = np.empty(n_snapshots)
    rate = np.empty(n_snapshots)
    free = Free()
    for i, t in enumerate(times):
        if i > 0:
            phi = evolve_forward(phi, free, float(t), dt_solver, units)
        # measure on the renormalized density: linear-solver round-off drifts
        # the mass by ~1e-12 over thousands of steps, which would floor H
        snap = phi.normalized()
        H[i] = h_functional(snap, V)
        rate[i] = h_rate(snap, units)

    eps_mono = max(1e-10 * abs(H[0]), 1e-13)
    drops = np.diff(H) < -eps_mono
    if np.any(drops):
        i = int(np.argmax(drops))
        raise MonotonicityError(
            f"H decreased by {H[i] - H[i + 1]:.3g} between t = {times[i]:.6g} "
            f"and {times[i + 1]:.6g}; relaxation must be monotone")
    s_total = units.kB * (H + math.log(V) + math.log(gamma))
    s_final = units.kB * math.log(V * gamma)
    return HSeries(times=times, H=H, H_rate=rate, S_total=s_total, S_final=s_final)


def velocity_correlation(units: UnitSystem, beta: float, delta_t: float,
                         n_paths: int, rng) -> VelocityCorrEstimate:
    """Mean product of adjacent forward/backward velocities on closed bridges.

    Bridges have duration tau = beta*hbar; delta_t must divide tau into at
    least two steps and satisfy delta_t <= tau/2.  The closed form is
    -2D/tau = -1/(m beta), independent of delta_t.
    """
    if not beta > 0:
        raise InvalidArgumentError("beta must be positive")
    tau = beta * units.hbar
    if not (0 < delta_t <= tau / 2.0):
        raise InvalidArgumentError(f"delta_t must lie in (0, tau/2] with tau = {tau}")
    n_steps = int(round(tau / delta_t))
    dt = tau / n_steps
    rng = as_generator(rng)
    n_chunks = max(1, math.ceil(n_paths / _CHUNK))
    path_means = np.empty(n_paths)
    done = 0
    for stream in substreams(rng, n_chunks):
        m = min(_CHUNK, n_paths - done)
        pos = sample_pinned_bridges(units, 0.0, 0.0, tau, n_steps, m, stream)
        incr = np.diff(pos, axis=1)
        prod = incr[:, 1:] * incr[:, :-1] / dt**2  # all interior triples
        path_means[done:done + m] = prod.mean(axis=1)
        done += m
    value = float(np.mean(path_means))
    se = float(np.std(path_means, ddof=1) / math.sqrt(n_paths))
    return VelocityCorrEstimate(delta_t=dt, value=value, std_error=se,
                                beta=beta, n_paths=n_paths)
