"""Path-based statistical thermodynamics on a primarily discrete space-time.

The package simulates a single mass whose motion is a nearest-neighbor jump
process on a space-time lattice constrained by dt = m*dx^2/hbar.  In the
continuum limit this yields a diffusion with D = hbar/2m whose fundamental
solution, weighted closed-path counts and entry-exit conditioning reproduce,
respectively, kernel composition laws, equilibrium thermodynamics at the
window tau* = beta*hbar, an H-theorem, and a complex wave description.
"""

__version__ = "0.1.0"

from .errors import (AmbiguousTemperatureError, ConfigError,
                     InfeasibleEnergyError, InfeasiblePairError,
                     InvalidArgumentError, MonotonicityError,
                     NumericalFailureError, PathThermError,
                     PrecisionFailureError)
from .spacetime import (NATURAL, Constant, Free, Grid1D, Harmonic, Lattice,
                        Path, Potential, Tabulated, UnitSystem, eval_potential,
                        make_lattice, sample_closed_bridge, sample_lattice_walk,
                        sample_pinned_bridges, sample_walk_displacements)
from .diffusion import (Field, Kernel, apply_kernel, compose_kernels,
                        delta_field, evolve_backward, evolve_forward,
                        gaussian_field, kernel, kernel_columns, uniform_field)
from .pathintegral import (ActionValue, MCEstimate, action, dlnz_dtau,
                           estimate_q_mc, z_path)
from .thermo import (SystemSpec, ThermoReport, ZerothLawResult, path_entropy,
                     path_temperature, solve_equilibrium_tau,
                     zeroth_law_experiment)
from .irreversibility import (HSeries, VelocityCorrEstimate, h_functional,
                              h_rate, relaxation_experiment,
                              velocity_correlation)
from .bridge import (BridgeSystem, EntryExit, PathEnsemble, build_bridge,
                     continuity_residual, normalize_entry_exit,
                     sample_bridge_paths, schrodinger_residual,
                     transition_densities)

__all__ = [name for name in dir() if not name.startswith("_")]
