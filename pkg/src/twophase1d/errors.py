"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside its admissible range (saturations, potentials, flux levels)."""


class ModelAssumptionError(ValueError):
    """A structural assumption on the flux model does not hold for this input."""


class CflError(RuntimeError):
    """Requested time step violates the convective stability bound."""


class NumericalError(RuntimeError):
    """A solver produced NaNs, left the admissible state box, or failed to converge."""


class RegimeError(ValueError):
    """Initial data outside the regime an operation is defined for."""


class ConfigError(ValueError):
    """Invalid run configuration; message lists every violated constraint."""
