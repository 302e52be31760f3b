"""Exception hierarchy shared by all modules."""


class D2P2Error(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(D2P2Error, ValueError):
    """Invalid parameters, dimension mismatches or contradictory settings."""


class NumericError(D2P2Error, ArithmeticError):
    """A computation produced a non-finite value."""

    def __init__(self, message, step=None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


class UsageError(D2P2Error, RuntimeError):
    """An API was called out of its required order."""


class InadmissibleOrderError(D2P2Error, ValueError):
    """A Renyi order lies above the admissibility cap of the subsampling bound."""


class NoValidOrderError(D2P2Error, ArithmeticError):
    """No admissible Renyi order remains, so no finite epsilon can be certified."""


class InfeasibleError(D2P2Error, ValueError):
    """A privacy target cannot be met on the admissible order grid."""


class CSVParseError(D2P2Error, ValueError):
    """Malformed dataset CSV; the message carries the offending line number."""
