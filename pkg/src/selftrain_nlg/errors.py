"""Exception types shared across subpackages."""


class ConfigError(ValueError):
    """Invalid configuration value or a configuration referring to unknown schema items."""


class NumericalError(FloatingPointError):
    """A computation produced NaN or infinite values."""
