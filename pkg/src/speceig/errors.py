"""Exception types raised across the package."""


class SpecEigError(Exception):
    """Base class for all package errors."""


class InvalidModelError(SpecEigError, ValueError):
    """A model or circuit was requested with invalid parameters."""


class OracleCapacityError(SpecEigError):
    """A dense (exact) computation was requested beyond the qubit cap."""


class PoleProximityError(SpecEigError, ValueError):
    """The perturbative formula was evaluated too close to one of its poles."""


class ConfigError(SpecEigError, ValueError):
    """An experiment configuration failed validation."""
