"""Grid solvers for the potential-weighted diffusion pair and its kernel.

The forward equation is d(phi)/dt = D*Lap(phi) - (u/hbar)*phi with D = hbar/2m;
the backward equation is the same flow run in the reversed time coordinate.
Space is discretized with a cell-centered finite-volume Laplacian (symmetric,
row sums zero), time with the trapezoidal rule.  Because the one-step
propagator is a symmetric matrix with unit row sums (for u = 0), discrete mass
conservation, kernel symmetry and Chapman-Kolmogorov composition hold to
round-off rather than to truncation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import InvalidArgumentError, NumericalFailureError
from .spacetime import NATURAL, Grid1D, Potential, UnitSystem

__all__ = [
    "Field",
    "Kernel",
    "laplacian_matrix",
    "generator_matrix",
    "gradient",
    "laplacian_values",
    "evolve_forward",
    "evolve_backward",
    "kernel",
    "kernel_columns",
    "compose_kernels",
    "apply_kernel",
    "delta_field",
    "gaussian_field",
    "uniform_field",
]

_TIME_ATOL = 1e-12


@dataclass(frozen=True)
class Field:
    """Snapshot of a real scalar on a grid at time t."""

    grid: Grid1D
    t: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_cells,):
            raise InvalidArgumentError(
                f"values shape {values.shape} does not match grid with {self.grid.n_cells} cells")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("field values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def mass(self) -> float:
        """Midpoint integral of the field over the box."""
        return float(self.values.sum() * self.grid.h)

    def normalized(self) -> "Field":
        m = self.mass()
        if not m > 0:
            raise InvalidArgumentError("cannot normalize a field with non-positive mass")
        return Field(self.grid, self.t, self.values / m)

    def is_density(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.values >= 0.0) and abs(self.mass() - 1.0) <= tol)


@dataclass(frozen=True)
class Kernel:
    """Fundamental solution q(t0, y; t1, x) sampled on the grid.

    entries[y, x] is the density at x reached from a unit point mass at cell y;
    a source density integrates against rows with measure h.
    """

    grid: Grid1D
    t0: float
    t1: float
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        n = self.grid.n_cells
        if entries.shape != (n, n):
            raise InvalidArgumentError(f"kernel entries must be ({n}, {n})")
        if not np.all(np.isfinite(entries)):
            raise InvalidArgumentError("kernel entries must be finite")
        entries = entries.copy()
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)


def laplacian_matrix(grid: Grid1D) -> sp.csr_matrix:
    """Cell-centered finite-volume Laplacian with the grid's boundary closure.

    Reflecting walls use mirror ghost cells (zero flux); periodic wraps.
    Symmetric with zero row sums in both cases.
    """
    n, h = grid.n_cells, grid.h
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    if grid.boundary == "reflecting":
        main[0] = -1.0
        main[-1] = -1.0
        lap = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    else:
        lap = sp.diags([off, main, off], [-1, 0, 1], format="lil")
        lap[0, -1] = 1.0
        lap[-1, 0] = 1.0
    return (lap / h**2).tocsr()


def generator_matrix(grid: Grid1D, u: Potential, units: UnitSystem = NATURAL) -> sp.csr_matrix:
    """A = D*Lap - diag(u)/hbar, the generator of the forward flow."""
    lap = laplacian_matrix(grid)
    pot = sp.diags(np.asarray(u(grid.centers), dtype=float) / units.hbar)
    return (units.D * lap - pot).tocsr()


def gradient(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Centered first derivative; reflecting walls use the mirror ghost cell."""
    v = np.asarray(values, dtype=float)
    g = np.empty_like(v)
    two_h = 2.0 * grid.h
    g[1:-1] = (v[2:] - v[:-2]) / two_h
    if grid.boundary == "periodic":
        g[0] = (v[1] - v[-1]) / two_h
        g[-1] = (v[0] - v[-2]) / two_h
    else:
        g[0] = (v[1] - v[0]) / two_h
        g[-1] = (v[-1] - v[-2]) / two_h
    return g


def laplacian_values(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Pointwise discrete Laplacian with the grid's boundary closure.

    Works for real or complex arrays; NaNs propagate to their stencil
    neighbors, which is what the masked residual norms rely on.
    """
    v = np.asarray(values)
    out = np.empty_like(v)
    h2 = grid.h**2
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
    if grid.boundary == "periodic":
        out[0] = (v[1] - 2.0 * v[0] + v[-1]) / h2
        out[-1] = (v[0] - 2.0 * v[-1] + v[-2]) / h2
    else:
        out[0] = (v[1] - v[0]) / h2
        out[-1] = (v[-2] - v[-1]) / h2
    return out


class _TrapezoidalStepper:
    """One-step propagator (I - a A)^-1 (I + a A) with a = dt/2, LU factored once."""

    def __init__(self, grid: Grid1D, u: Potential, units: UnitSystem, dt: float):
        a = 0.5 * dt
        gen = generator_matrix(grid, u, units)
        eye = sp.identity(grid.n_cells, format="csc")
        self._lu = splu((eye - a * gen).tocsc())
        self._plus = (eye + a * gen).tocsr()

    def step(self, x: np.ndarray) -> np.ndarray:
        return self._lu.solve(self._plus @ x)


def _split_duration(duration: float, dt_solver: float) -> tuple[int, float]:
    if not dt_solver > 0:
        raise InvalidArgumentError("dt_solver must be positive")
    n = max(1, math.ceil(duration / dt_solver - 1e-12))
    return n, duration / n


def _propagate(x: np.ndarray, grid: Grid1D, u, units: UnitSystem,
               t_from: float, duration: float, dt_solver: float) -> np.ndarray:
    """Advance state x (vector or matrix of columns) by `duration`.

    `u` may be a Potential or a callable t -> Potential (time-dependent case,
    midpoint-evaluated per step, no LU reuse).
    """
    n_steps, dt = _split_duration(duration, dt_solver)
    time_dependent = callable(u) and not isinstance(u, Potential)
    if not time_dependent:
        stepper = _TrapezoidalStepper(grid, u, units, dt)
    for i in range(n_steps):
        if time_dependent:
            stepper = _TrapezoidalStepper(grid, u(t_from + (i + 0.5) * dt), units, dt)
        x = stepper.step(x)
        if not np.all(np.isfinite(x)):
            raise NumericalFailureError(
                f"non-finite field after step {i + 1}/{n_steps} "
                f"(t = {t_from + (i + 1) * dt:.6g}, dt = {dt:.3g})")
    return x


def evolve_forward(phi0: Field, u, t_end: float, dt_solver: float,
                   units: UnitSystem = NATURAL) -> Field:
    """Solve the forward equation from phi0.t to t_end.

    With u = 0 this is plain diffusion; a constant offset c multiplies the
    free solution by exp(-c (t_end - t)/hbar).  t_end equal to phi0.t returns
    the input unchanged.
    """
    duration = t_end - phi0.t
    if duration < -_TIME_ATOL:
        raise InvalidArgumentError(f"t_end = {t_end} precedes the field time {phi0.t}")
    if duration <= _TIME_ATOL:
        return Field(phi0.grid, t_end, phi0.values)
    out = _propagate(phi0.values.copy(), phi0.grid, u, units, phi0.t, duration, dt_solver)
    return Field(phi0.grid, t_end, out)


def evolve_backward(phihat1: Field, u, t_start: float, dt_solver: float,
                    units: UnitSystem = NATURAL) -> Field:
    """Solve the backward equation from phihat1.t down to t_start.

    In the reversed time coordinate s = t1 - t this is exactly the forward
    flow, so both directions spread; running backward then forward is not an
    identity.
    """
    duration = phihat1.t - t_start
    if duration < -_TIME_ATOL:
        raise InvalidArgumentError(f"t_start = {t_start} is after the field time {phihat1.t}")
    if duration <= _TIME_ATOL:
        return Field(phihat1.grid, t_start, phihat1.values)
    if callable(u) and not isinstance(u, Potential):
        u_rev = lambda s: u(phihat1.t - s)  # noqa: E731 - reversed clock
    else:
        u_rev = u
    out = _propagate(phihat1.values.copy(), phihat1.grid, u_rev, units, 0.0, duration, dt_solver)
    return Field(phihat1.grid, t_start, out)


def kernel_columns(grid: Grid1D, u, t0: float, t1: float, dt_solver: float,
                   sources, units: UnitSystem = NATURAL) -> np.ndarray:
    """Selected kernel columns q(t0, y_src; t1, .), shape (n_cells, n_sources).

    Each source is a discrete delta of height 1/h at the given cell index.
    """
    sources = np.atleast_1d(np.asarray(sources, dtype=int))
    n = grid.n_cells
    if np.any(sources < 0) or np.any(sources >= n):
        raise InvalidArgumentError("source cell index out of range")
    x = np.zeros((n, sources.size))
    x[sources, np.arange(sources.size)] = 1.0 / grid.h
    if t1 - t0 <= _TIME_ATOL:
        return x
    return _propagate(x, grid, u, units, t0, t1 - t0, dt_solver)


def kernel(grid: Grid1D, u, t0: float, t1: float, dt_solver: float,
           units: UnitSystem = NATURAL) -> Kernel:
    """Full fundamental solution as a grid-to-grid map.

    Computed by evolving a discrete delta from every source cell at once.
    t1 = t0 returns the identity kernel (entries I/h).
    """
    if t1 - t0 < -_TIME_ATOL:
        raise InvalidArgumentError("t1 must not precede t0")
    cols = kernel_columns(grid, u, t0, t1, dt_solver, np.arange(grid.n_cells), units)
    # cols[x, y] is the response at x to a delta at y; entries are [y, x].
    return Kernel(grid=grid, t0=t0, t1=t1, entries=cols.T)


def apply_kernel(k: Kernel, phi: Field) -> Field:
    """Integrate a source density against the kernel (the propagation integral)."""
    if phi.grid != k.grid:
        raise InvalidArgumentError("field and kernel live on different grids")
    if abs(phi.t - k.t0) > _TIME_ATOL:
        raise InvalidArgumentError(f"field time {phi.t} does not match kernel t0 {k.t0}")
    return Field(k.grid, k.t1, (k.entries.T @ phi.values) * k.grid.h)


def compose_kernels(k_ab: Kernel, k_bc: Kernel) -> Kernel:
    """Chapman-Kolmogorov composition q_ac(y, x) = int q_ab(y, b) q_bc(b, x) db."""
    if k_ab.grid != k_bc.grid:
        raise InvalidArgumentError("kernels live on different grids")
    if abs(k_ab.t1 - k_bc.t0) > _TIME_ATOL:
        raise InvalidArgumentError(
            f"kernels are not adjacent in time: {k_ab.t1} vs {k_bc.t0}")
    entries = (k_ab.entries @ k_bc.entries) * k_ab.grid.h
    return Kernel(grid=k_ab.grid, t0=k_ab.t0, t1=k_bc.t1, entries=entries)


# --- field constructors ------------------------------------------------------

def delta_field(grid: Grid1D, x0: float, t: float = 0.0) -> Field:
    """Discrete delta: 1/h at the cell containing x0."""
    values = np.zeros(grid.n_cells)
    values[grid.nearest_cell(x0)] = 1.0 / grid.h
    return Field(grid, t, values)


def gaussian_field(grid: Grid1D, center: float, var: float, t: float = 0.0,
                   normalize: bool = True) -> Field:
    if not var > 0:
        raise InvalidArgumentError("variance must be positive")
    x = grid.centers
    values = np.exp(-((x - center) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
    f = Field(grid, t, values)
    return f.normalized() if normalize else f


def uniform_field(grid: Grid1D, t: float = 0.0) -> Field:
    return Field(grid, t, np.full(grid.n_cells, 1.0 / grid.length))
