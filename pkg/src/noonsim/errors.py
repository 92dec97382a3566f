class ConfigError(ValueError):
    """Invalid configuration or netlist. The message names the offending item."""


class FuseError(ValueError):
    """Requested heater drive would exceed the fuse voltage."""


class FitError(RuntimeError):
    """Least-squares fit could not be carried out (e.g. singular normal equations)."""
