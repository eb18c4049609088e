"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter lies outside the range an operation accepts."""


class NormalizationError(ValueError):
    """A coin state handed to the walk is not normalized."""


class NonUnitaryError(ValueError):
    """An operator expected to be unitary is not (within tolerance)."""


class AliasingError(ValueError):
    """A momentum grid is too small to hold the lattice support without wrap-around."""


class InsufficientPointsError(ValueError):
    """Too few usable samples for a regression."""


class ConfigError(ValueError):
    """A configuration file or flag could not be parsed or validated."""
