"""Exception types shared across the package.

Two failure families matter operationally: bad configuration (caught before
any numerics run) and numerical breakdown (non-finite values appearing mid
computation).  The CLI maps them to distinct exit codes.
"""


class ConfigError(ValueError):
    """A configuration value or combination of values is invalid."""


class NumericalError(RuntimeError):
    """A computation produced non-finite values or cannot proceed numerically."""
