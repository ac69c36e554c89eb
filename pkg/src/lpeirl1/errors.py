"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when numeric input is malformed (non-finite entries, bad values)."""


class DimensionMismatchError(ValueError):
    """Raised when array arguments disagree on dimension."""


class ConfigurationError(ValueError):
    """Raised when a solver or experiment knob is outside its valid range."""


class FileFormatError(ValueError):
    """Raised when an on-disk artifact (matrix container, trace CSV) is malformed."""


class EstimationError(RuntimeError):
    """Power iteration failed to settle within its budget.

    Carries the last estimate so callers can still inspect it.
    """

    def __init__(self, message, last_estimate=None, last_vector=None):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.last_vector = last_vector


class LipschitzMarginWarning(UserWarning):
    """The proximal weight beta does not exceed the estimated gradient Lipschitz constant."""
