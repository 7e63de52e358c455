"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid run configuration or geometry parameters."""


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""


class CacheError(RuntimeError):
    """A cached artifact is missing, stale, or corrupted."""
