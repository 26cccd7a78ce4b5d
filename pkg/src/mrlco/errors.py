"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration (bad generator parameters, empty ranges, ...)."""


class CapacityError(RuntimeError):
    """A hard capacity limit was exceeded (neighbor slots, enumeration cap)."""


class ProtocolError(RuntimeError):
    """An API was driven out of order (step after done, incomplete plan, ...)."""
