"""Space-time primitives: units, the discrete lattice, grids, potentials and paths.

The lattice geometry is fixed by the single constraint dt = m*dx^2/hbar, whose
continuum limit is a diffusion with coefficient D = hbar/2m.  Everything else
in the package (solvers, path measures, thermodynamic windows) is built on the
samplers and containers defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "UnitSystem",
    "NATURAL",
    "Lattice",
    "Grid1D",
    "Potential",
    "Free",
    "Constant",
    "Harmonic",
    "Tabulated",
    "Path",
    "as_generator",
    "substreams",
    "make_lattice",
    "eval_potential",
    "sample_lattice_walk",
    "sample_walk_displacements",
    "sample_closed_bridge",
    "sample_pinned_bridges",
]


@dataclass(frozen=True)
class UnitSystem:
    """Physical constants carried symbolically; defaults are natural units.

    Attributes
    ----------
    hbar : float
        Action quantum (energy * time).
    mass : float
        Particle mass.
    kB : float
        Boltzmann constant (energy / temperature).
    """

    hbar: float = 1.0
    mass: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0 and self.kB > 0):
            raise InvalidArgumentError("hbar, mass and kB must be strictly positive")

    @property
    def D(self) -> float:
        """Diffusion coefficient hbar/2m of the continuum walk limit."""
        return self.hbar / (2.0 * self.mass)


NATURAL = UnitSystem()


@dataclass(frozen=True)
class Lattice:
    """Elementary space-time cell; dt and dx are tied by dt = m*dx^2/hbar."""

    dx: float
    dt: float


def make_lattice(units: UnitSystem, dx: float) -> Lattice:
    """Build the lattice whose geometry mimics the uncertainty relations.

    dt is fixed to mass*dx^2/hbar, which makes dx*(m*dx/dt) = hbar and
    (dt/2)*m*(dx/dt)^2 = hbar/2 exact identities.
    """
    if not (dx > 0):
        raise InvalidArgumentError(f"dx must be positive, got {dx}")
    return Lattice(dx=float(dx), dt=units.mass * float(dx) ** 2 / units.hbar)


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on [x_min, x_max] with a boundary policy.

    Fields live at cell centers x_i = x_min + (i + 1/2) h; integrals are
    midpoint sums with measure h.  `reflecting` means zero-flux walls,
    `periodic` wraps.
    """

    x_min: float
    x_max: float
    n_cells: int
    boundary: str = "reflecting"

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise InvalidArgumentError("x_max must exceed x_min")
        if self.n_cells < 2:
            raise InvalidArgumentError("n_cells must be at least 2")
        if self.boundary not in ("reflecting", "periodic"):
            raise InvalidArgumentError(f"unknown boundary policy {self.boundary!r}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def length(self) -> float:
        """Box volume V in 1D."""
        return self.x_max - self.x_min

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.h

    def nearest_cell(self, x: float) -> int:
        i = int(np.floor((x - self.x_min) / self.h))
        return min(max(i, 0), self.n_cells - 1)


class Potential:
    """Tagged family of time-independent external potentials u(x)."""

    def __call__(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class Free(Potential):
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Constant(Potential):
    c: float

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)


@dataclass(frozen=True)
class Harmonic(Potential):
    """u(x) = (1/2) mass * omega^2 (x - center)^2."""

    omega: float
    center: float = 0.0
    mass: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise InvalidArgumentError("harmonic omega must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.mass * self.omega**2 * (x - self.center) ** 2


class Tabulated(Potential):
    """Sampled potential with linear interpolation, clamped at the edges."""

    def __init__(self, x, values):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != values.shape or x.size < 2:
            raise InvalidArgumentError("tabulated potential needs matching 1-d x/values, length >= 2")
        if not np.all(np.diff(x) > 0):
            raise InvalidArgumentError("tabulated x samples must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("tabulated potential values must be finite")
        self.x = x.copy()
        self.values = values.copy()
        self.x.setflags(write=False)
        self.values.setflags(write=False)

    def __call__(self, x):
        # np.interp clamps outside the sample range, matching the contract.
        return np.interp(np.asarray(x, dtype=float), self.x, self.values)

    def __repr__(self):
        return f"Tabulated(n={self.x.size}, range=[{self.x[0]}, {self.x[-1]}])"


def eval_potential(u: Potential, x):
    """Evaluate u(x); scalar in, scalar out, array in, array out."""
    out = u(x)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Path:
    """Time-ordered positions; `closed` pins x(last) = x(first)."""

    times: np.ndarray
    positions: np.ndarray
    closed: bool = False

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if times.ndim != 1 or times.shape != positions.shape or times.size < 1:
            raise InvalidArgumentError("times and positions must be matching 1-d sequences")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise InvalidArgumentError("times must be strictly increasing")
        if self.closed and positions[0] != positions[-1]:
            raise InvalidArgumentError("closed path must end where it starts")
        times = times.copy()
        positions = positions.copy()
        times.setflags(write=False)
        positions.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)

    def __len__(self) -> int:
        return self.times.size

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


# --- seeded streams ---------------------------------------------------------

def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or an integer seed; anything else is an error."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng))
    raise InvalidArgumentError(f"rng must be a numpy Generator or an int seed, got {type(rng)!r}")


def substreams(rng, n: int) -> list[np.random.Generator]:
    """Disjoint child streams; deterministic for a fixed (seed, n)."""
    return as_generator(rng).spawn(n)


# --- samplers ---------------------------------------------------------------

def _walk_steps(rng: np.random.Generator, n_walks: int, n_steps: int) -> np.ndarray:
    """+/-1 step matrix, int8, shape (n_walks, n_steps)."""
    return (2 * rng.integers(0, 2, size=(n_walks, n_steps), dtype=np.int8) - 1).astype(np.int8)


def sample_lattice_walk(lattice: Lattice, n_steps: int, x0: float, rng) -> Path:
    """Nearest-neighbor random walk on the lattice: +/-dx with equal probability.

    n_steps = 0 yields the degenerate single-point path at x0.
    """
    if n_steps < 0:
        raise InvalidArgumentError("n_steps must be non-negative")
    rng = as_generator(rng)
    times = np.arange(n_steps + 1) * lattice.dt
    if n_steps == 0:
        return Path(times=times, positions=np.array([float(x0)]))
    steps = _walk_steps(rng, 1, n_steps)[0]
    positions = float(x0) + lattice.dx * np.concatenate(([0.0], np.cumsum(steps, dtype=float)))
    return Path(times=times, positions=positions)


def sample_walk_displacements(lattice: Lattice, n_steps: int, n_walks: int, rng,
                              chunk: int = 2000) -> np.ndarray:
    """Final displacements of an ensemble of lattice walks (chunked, same draws
    as `sample_lattice_walk` would make)."""
    if n_steps < 0 or n_walks < 1:
        raise InvalidArgumentError("need n_steps >= 0 and n_walks >= 1")
    rng = as_generator(rng)
    out = np.empty(n_walks)
    done = 0
    while done < n_walks:
        m = min(chunk, n_walks - done)
        out[done:done + m] = lattice.dx * _walk_steps(rng, m, n_steps).sum(axis=1, dtype=np.int64)
        done += m
    return out


def sample_pinned_bridges(units: UnitSystem, x0: float, x1: float, tau: float,
                          n_steps: int, n_paths: int, rng) -> np.ndarray:
    """Brownian bridges from x0 to x1 over [0, tau] with variance rate 2D.

    Returns positions of shape (n_paths, n_steps + 1); endpoints are pinned
    exactly.  Interior covariance is 2D*(min(s,t) - s*t/tau).
    """
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    if n_steps < 1:
        raise InvalidArgumentError("n_steps must be at least 1")
    rng = as_generator(rng)
    dt = tau / n_steps
    incr = rng.normal(0.0, math.sqrt(2.0 * units.D * dt), size=(n_paths, n_steps))
    w = np.empty((n_paths, n_steps + 1))
    w[:, 0] = 0.0
    np.cumsum(incr, axis=1, out=w[:, 1:])
    s = np.linspace(0.0, 1.0, n_steps + 1)
    out = x0 + (x1 - x0) * s + w - w[:, -1:] * s
    out[:, 0] = x0  # pin endpoints exactly; the bulk expression is 1 ulp off
    out[:, -1] = x1
    return out


def sample_closed_bridge(units: UnitSystem, x0: float, tau: float, n_steps: int, rng) -> Path:
    """One closed free path x(0) = x(tau) = x0 from the exact bridge measure."""
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    if n_steps < 2:
        raise InvalidArgumentError("a closed bridge needs n_steps >= 2")
    positions = sample_pinned_bridges(units, x0, x0, tau, n_steps, 1, rng)[0]
    return Path(times=np.linspace(0.0, tau, n_steps + 1), positions=positions, closed=True)
