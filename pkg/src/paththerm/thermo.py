"""Path entropy, path temperature and the equilibrium window tau* = beta*hbar.

A system prepared with energy U in a box acquires the entropy
S_path = kB*tau*U/hbar + kB*ln Z_path(tau).  The equilibrium window tau* is
the root of -hbar * d ln Z_path / d tau = U; at that window T* = hbar/(kB tau*)
and the report reproduces the standard relations F = U - T*S and
S = kB (ln Z + beta* U) identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .errors import (AmbiguousTemperatureError, InfeasibleEnergyError,
                     InvalidArgumentError)
from .pathintegral import dlnz_dtau, z_path
from .spacetime import Grid1D, Potential, UnitSystem, as_generator

__all__ = [
    "SystemSpec",
    "ThermoReport",
    "ZerothLawResult",
    "path_entropy",
    "path_temperature",
    "solve_equilibrium_tau",
    "zeroth_law_experiment",
]

_MAX_BRACKET_EXPANSIONS = 60


@dataclass(frozen=True)
class SystemSpec:
    """One prepared system: constants, box, potential and preparation energy."""

    units: UnitSystem
    grid: Grid1D
    u: Potential
    U: float


@dataclass(frozen=True)
class ThermoReport:
    """Thermodynamic bundle at the equilibrium window.

    Internal identities (tau* = beta* hbar, the entropy formula, F = U - T*S)
    hold to round-off by construction and are re-checked by the test suite.
    """

    U: float
    tau_star: float
    T_star: float
    beta_star: float
    Z_path: float
    S_path: float
    F: float
    Lambda: float
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "U": self.U,
            "tau_star": self.tau_star,
            "T_star": self.T_star,
            "beta_star": self.beta_star,
            "Z_path": self.Z_path,
            "S_path": self.S_path,
            "F": self.F,
            "Lambda": self.Lambda,
            "provenance": dict(self.provenance),
        }


@dataclass(frozen=True)
class ZerothLawResult:
    """Outcome of the two-subsystem entropy-maximization scan."""

    U_A: float
    U_B: float
    T_A: float
    T_B: float
    scan_U_A: np.ndarray
    scan_S_total: np.ndarray


def path_entropy(U: float, tau: float, z_path_value: float, units: UnitSystem) -> float:
    """kB*tau*U/hbar + kB*ln Z_path."""
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    if not z_path_value > 0:
        raise InvalidArgumentError("Z_path must be positive")
    return units.kB * (tau * U / units.hbar + math.log(z_path_value))


def _make_energy_fn(spec: SystemSpec, mode: str, n_paths: int, n_steps: int,
                    quad_points: int, seed: int, se_tol=None):
    """U(tau) = -hbar * d ln Z / d tau, analytic or MC with a frozen substream.

    The MC variant reuses the same seed for every tau so the function seen by
    the root finder is smooth (common random numbers across evaluations, not
    just across the two sides of one difference).
    """
    if mode == "analytic":
        return lambda tau: analytic.internal_energy(spec.u, tau, spec.units)

    def energy(tau: float) -> float:
        est = dlnz_dtau(spec.u, spec.grid, tau, n_paths, n_steps, rng=seed,
                        units=spec.units, quad_points=quad_points, se_tol=se_tol)
        return -spec.units.hbar * est.mean

    return energy


def _resolve_mode(mode: str, u: Potential) -> str:
    if mode == "auto":
        return "analytic" if analytic.has_closed_form(u) else "mc"
    if mode not in ("analytic", "mc"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    if mode == "analytic" and not analytic.has_closed_form(u):
        raise InvalidArgumentError(f"no closed form for {type(u).__name__}; use mode='mc'")
    return mode


def solve_equilibrium_tau(spec: SystemSpec, tol: float = 1e-3, *, mode: str = "auto",
                          n_paths: int = 10_000, n_steps: int = 256,
                          quad_points: int = 64, rng=0) -> ThermoReport:
    """Find the window tau* at which the path energy equals the preparation U.

    Bracketing bisection on f(tau) = -hbar d ln Z/d tau - U with geometric
    expansion from tau0 = hbar/U; f is strictly decreasing for the supported
    potentials, so the root is unique.  `tol` is the relative bracket width at
    termination.  mode "analytic" uses the closed-form ln Z (tight oracle
    runs); "mc" uses the common-random-number derivative estimator; "auto"
    picks analytic when a closed form exists.
    """
    mode = _resolve_mode(mode, spec.u)
    units = spec.units
    seed = int(as_generator(rng).integers(2**63)) if not isinstance(rng, (int, np.integer)) else int(rng)
    se_tol = tol * abs(spec.U) / units.hbar if mode == "mc" else None
    energy = _make_energy_fn(spec, mode, n_paths, n_steps, quad_points, seed, se_tol)

    tau0 = units.hbar / abs(spec.U) if spec.U != 0 else units.hbar
    f = lambda tau: energy(tau) - spec.U  # noqa: E731
    lo = hi = tau0
    f0 = f(tau0)
    if f0 > 0:
        for _ in range(_MAX_BRACKET_EXPANSIONS):
            hi *= 2.0
            if f(hi) <= 0:
                break
        else:
            raise InfeasibleEnergyError(
                f"U = {spec.U} is below the achievable path energy for this potential")
    elif f0 < 0:
        for _ in range(_MAX_BRACKET_EXPANSIONS):
            lo /= 2.0
            if f(lo) >= 0:
                break
        else:
            raise InfeasibleEnergyError(
                f"no window found with path energy as large as U = {spec.U}")
    iterations = 0
    while (hi - lo) > tol * 0.5 * (hi + lo):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    tau_star = 0.5 * (lo + hi)

    provenance: dict = {
        "mode": mode, "tol": tol, "seed": seed, "bisection_iterations": iterations,
    }
    if mode == "analytic":
        z_value = math.exp(analytic.ln_z_path(spec.u, spec.grid, tau_star, units))
    else:
        z_est = z_path(spec.u, spec.grid, tau_star, n_paths, n_steps,
                       rng=seed + 1, units=units, quad_points=quad_points)
        z_value = z_est.mean
        provenance.update(n_paths=n_paths, n_steps=n_steps, quad_points=quad_points,
                          z_std_error=z_est.std_error)
    if analytic.has_closed_form(spec.u):
        tau_ref = analytic.equilibrium_window(spec.u, spec.U, units)
        provenance["analytic_window_rel_dev"] = abs(tau_star - tau_ref) / tau_ref

    T_star = units.hbar / (units.kB * tau_star)
    beta_star = tau_star / units.hbar
    S = path_entropy(spec.U, tau_star, z_value, units)
    return ThermoReport(
        U=spec.U, tau_star=tau_star, T_star=T_star, beta_star=beta_star,
        Z_path=z_value, S_path=S, F=spec.U - T_star * S,
        Lambda=units.hbar / math.sqrt(units.mass * units.kB * T_star),
        provenance=provenance,
    )


def path_temperature(spec: SystemSpec, tau_of_U, dU: float, *, ln_z=None) -> float:
    """1 / (dS_path/dU) along a caller-chosen tau(U), by central difference.

    With tau held constant the result is exactly hbar/(kB tau); along the
    equilibrium window tau*(U) it equals T* regardless of d tau*/dU.  `ln_z`
    maps tau -> ln Z_path; it defaults to the closed form when one exists.
    """
    if not dU > 0:
        raise InvalidArgumentError("dU must be positive")
    units = spec.units
    if ln_z is None:
        if not analytic.has_closed_form(spec.u):
            raise InvalidArgumentError("no closed-form ln Z; pass ln_z explicitly")
        ln_z = lambda tau: analytic.ln_z_path(spec.u, spec.grid, tau, units)  # noqa: E731

    def entropy(U: float) -> float:
        tau = tau_of_U(U)
        return units.kB * (tau * U / units.hbar + ln_z(tau))

    s_minus, s_mid, s_plus = (entropy(spec.U + k * dU) for k in (-1.0, 0.0, 1.0))
    if not ((s_plus > s_mid > s_minus) or (s_plus < s_mid < s_minus)):
        raise AmbiguousTemperatureError(
            f"entropy is not monotone over the bracket around U = {spec.U}")
    return 2.0 * dU / (s_plus - s_minus)


def _entropy_at_equilibrium(spec: SystemSpec, U: float, solver_kwargs: dict) -> float:
    report = solve_equilibrium_tau(
        SystemSpec(spec.units, spec.grid, spec.u, U), **solver_kwargs)
    return report.S_path


def zeroth_law_experiment(specA: SystemSpec, specB: SystemSpec, U_total: float,
                          n_grid: int = 41, *, mode: str = "auto", tol: float = 1e-6,
                          margin: float = 0.02, n_paths: int = 10_000,
                          n_steps: int = 256, quad_points: int = 64,
                          rng=0) -> ZerothLawResult:
    """Scan splits U_A + U_B = U_total and maximize S_A(U_A) + S_B(U_B).

    Infeasible splits contribute -inf; a maximum on the feasible boundary
    raises InfeasibleEnergyError.  The argmax is refined with a parabolic fit
    through its neighbors (which leaves a symmetric maximum exactly at the
    midpoint), and both subsystem temperatures are evaluated there.
    """
    if n_grid < 5:
        raise InvalidArgumentError("n_grid must be at least 5")
    if n_grid % 2 == 0:
        n_grid += 1  # keep the scan symmetric about U_total/2
    solver_kwargs = dict(tol=tol, mode=mode, n_paths=n_paths, n_steps=n_steps,
                         quad_points=quad_points, rng=rng)
    scan_u = U_total * np.linspace(margin, 1.0 - margin, n_grid)
    scan_s = np.full(n_grid, -np.inf)
    for i, u_a in enumerate(scan_u):
        try:
            s_a = _entropy_at_equilibrium(specA, float(u_a), solver_kwargs)
            s_b = _entropy_at_equilibrium(specB, float(U_total - u_a), solver_kwargs)
        except InfeasibleEnergyError:
            continue
        scan_s[i] = s_a + s_b
    if not np.any(np.isfinite(scan_s)):
        raise InfeasibleEnergyError(f"no feasible split of U_total = {U_total}")

    i_max = int(np.argmax(scan_s))
    feasible = np.isfinite(scan_s)
    if i_max in (0, n_grid - 1) or not (feasible[i_max - 1] and feasible[i_max + 1]):
        raise InfeasibleEnergyError(
            "entropy maximum sits on the scan boundary; U_total looks infeasible")

    s_lo, s_mid, s_hi = scan_s[i_max - 1], scan_s[i_max], scan_s[i_max + 1]
    denom = s_lo - 2.0 * s_mid + s_hi
    shift = 0.0 if denom == 0 else 0.5 * (s_lo - s_hi) / denom
    u_a_star = float(scan_u[i_max] + shift * (scan_u[1] - scan_u[0]))
    u_b_star = U_total - u_a_star

    report_a = solve_equilibrium_tau(
        SystemSpec(specA.units, specA.grid, specA.u, u_a_star), **solver_kwargs)
    report_b = solve_equilibrium_tau(
        SystemSpec(specB.units, specB.grid, specB.u, u_b_star), **solver_kwargs)
    return ZerothLawResult(U_A=u_a_star, U_B=u_b_star,
                           T_A=report_a.T_star, T_B=report_b.T_star,
                           scan_U_A=scan_u, scan_S_total=scan_s)
