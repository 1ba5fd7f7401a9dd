"""Exception types shared across the package."""


class ConfigError(ValueError):
    """An experiment configuration was rejected before any run started."""


class NumericalError(RuntimeError):
    """A numerical failure occurred while a run was in progress."""


class DivergenceError(NumericalError):
    """A recurrence left its guard interval (bad constants or input range)."""
