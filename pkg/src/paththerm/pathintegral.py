"""Discretized action, Feynman-Kac estimators and the closed-path count.

The kernel estimator importance-samples pinned free bridges and reweights by
exp(-(1/hbar) * int u dt), so the free case is exact with zero variance and a
constant offset factors out deterministically.  The tau-derivative of
ln Z_path uses common random numbers: one set of standard normals builds the
bridges at both perturbed windows, which removes almost all Monte Carlo noise
from the difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import free_kernel
from .errors import InvalidArgumentError, PrecisionFailureError
from .spacetime import (NATURAL, Grid1D, Path, Potential, UnitSystem,
                        as_generator, substreams)

__all__ = [
    "ActionValue",
    "MCEstimate",
    "action",
    "estimate_q_mc",
    "z_path",
    "dlnz_dtau",
    "quadrature_points",
]

_CHUNK = 20_000


@dataclass(frozen=True)
class ActionValue:
    """Hamiltonian action of a discretized path, in units of energy*time."""

    value: float


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 2:
            raise InvalidArgumentError("an estimate needs at least 2 samples")
        if not self.std_error >= 0:
            raise InvalidArgumentError("std_error must be non-negative")


def action(path: Path, u: Potential, units: UnitSystem = NATURAL) -> ActionValue:
    """Sum of m*(dx)^2/(2 dt) kinetic terms and trapezoidal potential terms.

    On a lattice step the kinetic term is hbar/2 regardless of dx, by the
    space-time constraint.
    """
    if len(path) < 2:
        raise InvalidArgumentError("action needs a path with at least 2 samples")
    dts = np.diff(path.times)
    dxs = np.diff(path.positions)
    u_vals = np.asarray(u(path.positions), dtype=float)
    kinetic = units.mass * np.sum(dxs**2 / dts) / 2.0
    potential = np.sum(0.5 * (u_vals[:-1] + u_vals[1:]) * dts)
    return ActionValue(float(kinetic + potential))


def _bridge_log_weights(u: Potential, x0: float, x1: float, tau: float,
                        n_steps: int, n_paths: int, rng, units: UnitSystem) -> np.ndarray:
    """log of exp(-(1/hbar) int u dt) over pinned free bridges, chunked over
    disjoint substreams so results are reproducible for a fixed seed."""
    dt = tau / n_steps
    s = np.linspace(0.0, 1.0, n_steps + 1)
    sigma = math.sqrt(2.0 * units.D * dt)
    n_chunks = max(1, math.ceil(n_paths / _CHUNK))
    streams = substreams(rng, n_chunks)
    out = np.empty(n_paths)
    done = 0
    for stream in streams:
        m = min(_CHUNK, n_paths - done)
        z = stream.normal(size=(m, n_steps))
        w = np.empty((m, n_steps + 1))
        w[:, 0] = 0.0
        np.cumsum(sigma * z, axis=1, out=w[:, 1:])
        pos = x0 + (x1 - x0) * s + w - w[:, -1:] * s
        u_vals = np.asarray(u(pos), dtype=float)
        pot = dt * (0.5 * u_vals[:, 0] + u_vals[:, 1:-1].sum(axis=1) + 0.5 * u_vals[:, -1])
        out[done:done + m] = -pot / units.hbar
        done += m
    return out


def _weight_stats(log_w: np.ndarray) -> tuple[float, float]:
    """(mean, std error) of exp(log_w), overflow-guarded by a common shift."""
    shift = float(np.max(log_w))
    w = np.exp(log_w - shift)
    mean = float(np.mean(w))
    n = w.size
    se = float(np.std(w, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    scale = math.exp(shift)
    return scale * mean, scale * se


def estimate_q_mc(x0: float, x1: float, tau: float, u: Potential, n_paths: int,
                  n_steps: int = 256, rng=0, units: UnitSystem = NATURAL) -> MCEstimate:
    """Monte Carlo value of the fundamental solution q(0, x0; tau, x1).

    The estimate is free_kernel(x0, x1, tau) times the mean Feynman-Kac weight
    over pinned bridges; for u = 0 every weight is 1 and the standard error is
    exactly zero.
    """
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    if n_paths < 2:
        raise InvalidArgumentError("n_paths must be at least 2")
    log_w = _bridge_log_weights(u, x0, x1, tau, n_steps, n_paths, rng, units)
    q0 = float(free_kernel(x0, x1, tau, units))
    mean, se = _weight_stats(log_w)
    return MCEstimate(mean=q0 * mean, std_error=q0 * se, n_samples=n_paths)


def quadrature_points(grid: Grid1D, n_points: int) -> tuple[np.ndarray, float]:
    """Midpoint-rule abscissas over the box and the panel width."""
    if n_points < 1:
        raise InvalidArgumentError("need at least one quadrature point")
    w = grid.length / n_points
    return grid.x_min + (np.arange(n_points) + 0.5) * w, w


def z_path(u: Potential, grid: Grid1D, tau: float, n_paths: int,
           n_steps: int = 256, rng=0, units: UnitSystem = NATURAL,
           quad_points: int = 64) -> MCEstimate:
    """Closed-path count over window tau: int dx0 q(0, x0; tau, x0).

    Quadrature is the midpoint rule over the box with `quad_points` panels;
    `n_paths` is the number of closed bridges per quadrature point.  Point
    estimates are independent, so their variances add in quadrature.
    """
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    xq, wq = quadrature_points(grid, quad_points)
    streams = substreams(rng, quad_points)
    total = 0.0
    var = 0.0
    for x, stream in zip(xq, streams):
        est = estimate_q_mc(x, x, tau, u, n_paths, n_steps, stream, units)
        total += wq * est.mean
        var += (wq * est.std_error) ** 2
    return MCEstimate(mean=total, std_error=math.sqrt(var), n_samples=n_paths * quad_points)


def dlnz_dtau(u: Potential, grid: Grid1D, tau: float, n_paths: int,
              n_steps: int = 256, rng=0, units: UnitSystem = NATURAL,
              quad_points: int = 64, eps: float = 1e-3,
              se_tol: float | None = None) -> MCEstimate:
    """Central finite difference of ln Z_path over [tau(1-eps), tau(1+eps)].

    Both evaluations share the same standard normals (common random numbers),
    so the noise of the difference is far below the noise of either level.
    The free-kernel prefactor contributes its exact -1/(2 tau) analytically.
    If `se_tol` is given and the standard error exceeds it, a
    PrecisionFailureError asks for more paths.
    """
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    if not 0 < eps < 1:
        raise InvalidArgumentError("eps must be in (0, 1)")
    tau_lo, tau_hi = tau * (1.0 - eps), tau * (1.0 + eps)
    dtau = tau_hi - tau_lo
    xq, wq = quadrature_points(grid, quad_points)
    streams = substreams(rng, quad_points)
    s = np.linspace(0.0, 1.0, n_steps + 1)

    sum_lo = sum_hi = 0.0
    var_lo = var_hi = cov = 0.0
    for x, stream in zip(xq, streams):
        n_chunks = max(1, math.ceil(n_paths / _CHUNK))
        w_lo_all = np.empty(n_paths)
        w_hi_all = np.empty(n_paths)
        done = 0
        for chunk_stream in substreams(stream, n_chunks):
            m = min(_CHUNK, n_paths - done)
            z = chunk_stream.normal(size=(m, n_steps))
            cum = np.cumsum(z, axis=1)
            for tau_k, out in ((tau_lo, w_lo_all), (tau_hi, w_hi_all)):
                dt = tau_k / n_steps
                w = np.empty((m, n_steps + 1))
                w[:, 0] = 0.0
                w[:, 1:] = math.sqrt(2.0 * units.D * dt) * cum
                pos = x + w - w[:, -1:] * s
                u_vals = np.asarray(u(pos), dtype=float)
                pot = dt * (0.5 * u_vals[:, 0] + u_vals[:, 1:-1].sum(axis=1)
                            + 0.5 * u_vals[:, -1])
                out[done:done + m] = np.exp(-pot / units.hbar)
            done += m
        mean_lo, mean_hi = float(np.mean(w_lo_all)), float(np.mean(w_hi_all))
        c = np.cov(w_lo_all, w_hi_all, ddof=1) / n_paths
        sum_lo += wq * mean_lo
        sum_hi += wq * mean_hi
        var_lo += wq**2 * c[0, 0]
        var_hi += wq**2 * c[1, 1]
        cov += wq**2 * c[0, 1]

    # ln Z = ln free prefactor + ln (quadrature sum of mean weights)
    d_prefactor = -0.5 * (math.log(tau_hi) - math.log(tau_lo)) / dtau
    d_weights = (math.log(sum_hi) - math.log(sum_lo)) / dtau
    se = math.sqrt(max(0.0, var_hi / sum_hi**2 + var_lo / sum_lo**2
                       - 2.0 * cov / (sum_hi * sum_lo))) / dtau
    if se_tol is not None and se > se_tol:
        raise PrecisionFailureError(
            f"derivative standard error {se:.3g} exceeds tolerance {se_tol:.3g}; "
            f"raise n_paths (currently {n_paths} per quadrature point)")
    return MCEstimate(mean=d_prefactor + d_weights, std_error=se,
                      n_samples=n_paths * quad_points)
