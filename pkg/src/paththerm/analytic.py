"""Closed-form references for the solvable potential family.

Free box, constant offset and harmonic well admit exact kernels and closed-path
counts; these back the tight "oracle mode" of the equilibrium solver and give
the tests an independent route to every Monte Carlo / PDE quantity.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgumentError
from .spacetime import Constant, Free, Grid1D, Harmonic, Potential, UnitSystem

__all__ = [
    "free_kernel",
    "mehler_kernel",
    "ln_z_path",
    "internal_energy",
    "energy_infimum",
    "equilibrium_window",
    "has_closed_form",
]


def free_kernel(x0, x1, tau: float, units: UnitSystem):
    """Unbounded free-diffusion kernel q0 = (4 pi D tau)^(-1/2) exp(-(dx)^2/(4 D tau))."""
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    four_d_tau = 4.0 * units.D * tau
    dx = np.asarray(x1, dtype=float) - np.asarray(x0, dtype=float)
    return np.exp(-dx**2 / four_d_tau) / math.sqrt(math.pi * four_d_tau)


def mehler_kernel(x0, x1, tau: float, omega: float, units: UnitSystem, center: float = 0.0):
    """Harmonic-well kernel of the potential-weighted diffusion equation.

    With s = omega*tau this is
        sqrt(m omega / (2 pi hbar sinh s)) *
        exp(-(m omega / (2 hbar sinh s)) * ((y^2 + x^2) cosh s - 2 y x))
    and it reduces to `free_kernel` as omega -> 0.
    """
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    m, hbar = units.mass, units.hbar
    s = omega * tau
    y = np.asarray(x0, dtype=float) - center
    x = np.asarray(x1, dtype=float) - center
    pref = math.sqrt(m * omega / (2.0 * math.pi * hbar * math.sinh(s)))
    expo = -(m * omega / (2.0 * hbar * math.sinh(s))) * ((y**2 + x**2) * math.cosh(s) - 2.0 * y * x)
    return pref * np.exp(expo)


def has_closed_form(u: Potential) -> bool:
    return isinstance(u, (Free, Constant, Harmonic))


def ln_z_path(u: Potential, grid: Grid1D, tau: float, units: UnitSystem) -> float:
    """ln of the closed-path count over window tau for the solvable family.

    Free / Constant count L * sqrt(m / (2 pi hbar tau)) closed paths per box of
    length L (times exp(-c tau/hbar) for the offset); Harmonic uses the
    infinite-volume trace 1 / (2 sinh(omega tau / 2)), valid when the box is
    much wider than the thermal width.
    """
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    m, hbar = units.mass, units.hbar
    ln_free = math.log(grid.length) + 0.5 * math.log(m / (2.0 * math.pi * hbar * tau))
    if isinstance(u, Free):
        return ln_free
    if isinstance(u, Constant):
        return ln_free - u.c * tau / hbar
    if isinstance(u, Harmonic):
        return -math.log(2.0 * math.sinh(u.omega * tau / 2.0))
    raise InvalidArgumentError(f"no closed-form ln Z for {type(u).__name__}")


def internal_energy(u: Potential, tau: float, units: UnitSystem) -> float:
    """-hbar * d ln Z_path / d tau in closed form."""
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    hbar = units.hbar
    if isinstance(u, Free):
        return hbar / (2.0 * tau)
    if isinstance(u, Constant):
        return hbar / (2.0 * tau) + u.c
    if isinstance(u, Harmonic):
        return 0.5 * hbar * u.omega / math.tanh(u.omega * tau / 2.0)
    raise InvalidArgumentError(f"no closed-form internal energy for {type(u).__name__}")


def energy_infimum(u: Potential, units: UnitSystem) -> float:
    """Greatest lower bound of internal_energy(tau) as tau -> infinity."""
    if isinstance(u, Free):
        return 0.0
    if isinstance(u, Constant):
        return u.c
    if isinstance(u, Harmonic):
        return 0.5 * units.hbar * u.omega
    raise InvalidArgumentError(f"no closed-form energy bound for {type(u).__name__}")


def equilibrium_window(u: Potential, U: float, units: UnitSystem) -> float:
    """Closed-form inversion of internal_energy(tau) = U (the window tau*)."""
    hbar = units.hbar
    if U <= energy_infimum(u, units):
        raise InvalidArgumentError(f"U = {U} is at or below the achievable minimum")
    if isinstance(u, Free):
        return hbar / (2.0 * U)
    if isinstance(u, Constant):
        return hbar / (2.0 * (U - u.c))
    if isinstance(u, Harmonic):
        return 2.0 / u.omega * math.atanh(hbar * u.omega / (2.0 * U))
    raise InvalidArgumentError(f"no closed-form window for {type(u).__name__}")
