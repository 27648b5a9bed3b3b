"""Exception types shared across the package."""


class CoopShapError(Exception):
    """Base class for errors raised by this package."""


class CapacityError(CoopShapError):
    """A request exceeds a configured size or budget limit."""


class MapFormatError(CoopShapError):
    """A grid map file is malformed. The message carries line/column info."""


class ConfigError(CoopShapError):
    """An experiment config is invalid. The message names the offending key."""
