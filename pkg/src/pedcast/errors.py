"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: config problems exit 2, data
problems exit 3, compute problems exit 4.
"""


class PedcastError(Exception):
    """Base class for all package errors."""


class ConfigError(PedcastError):
    """Invalid configuration: bad values, inconsistent dimensions, bad flags."""


class DataError(PedcastError):
    """Invalid input data: malformed files, bad rows, impossible requests."""


class ComputeError(PedcastError):
    """A numeric procedure could not complete (e.g. infeasible merge)."""
