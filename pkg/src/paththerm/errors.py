"""Exception hierarchy shared by the simulation modules and the CLI."""


class PathThermError(Exception):
    """Base class for all package-specific failures."""


class InvalidArgumentError(PathThermError, ValueError):
    """An argument violates a documented precondition."""


class NumericalFailureError(PathThermError, RuntimeError):
    """A solver produced non-finite values; carries step diagnostics."""


class PrecisionFailureError(PathThermError, RuntimeError):
    """Monte Carlo noise exceeds the requested tolerance; raise n_paths."""


class InfeasibleEnergyError(PathThermError, ValueError):
    """The requested preparation energy is outside the achievable range."""


class InfeasiblePairError(PathThermError, ValueError):
    """Entry and exit fields have no diffusive overlap (zero pairing)."""


class AmbiguousTemperatureError(PathThermError, RuntimeError):
    """Entropy is not monotone over the differencing bracket."""


class MonotonicityError(PathThermError, RuntimeError):
    """H(t) decreased beyond tolerance: a relaxation-theorem breach."""


class ConfigError(PathThermError, ValueError):
    """Experiment configuration failed schema validation."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"config error at '{path}': {message}")
