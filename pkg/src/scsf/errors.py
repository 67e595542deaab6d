"""Exception hierarchy."""


class ScsfError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ScsfError, ValueError):
    """Invalid hyperparameter or option."""


class SizeError(ScsfError, ValueError):
    """Input too short or with mismatched shape."""


class IngestionError(ScsfError, ValueError):
    """Malformed time-series input."""


class NumericError(ScsfError, ArithmeticError):
    """Non-finite values or a numerically failed solve."""


class DegenerateInputError(ScsfError, ValueError):
    """Data that carries no usable signal (e.g. all zeros)."""
