"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """An iterative kernel failed to converge within its configured budget."""


class FormatError(ValueError):
    """A data file could not be parsed or has the wrong shape."""


class ConfigError(ValueError):
    """An experiment configuration is invalid or references unknown components."""
