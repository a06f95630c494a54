"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
anything else -> 3.
"""


class TrendlagError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(TrendlagError):
    """Invalid or inconsistent configuration."""


class DataError(TrendlagError):
    """Malformed, empty, or otherwise unusable input data."""
