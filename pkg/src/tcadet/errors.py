"""Exception types shared across the package."""


class TcadetError(Exception):
    """Base class for all package-specific errors."""


class NotHermitian(TcadetError):
    """A matrix that must be Hermitian is not, beyond tolerance."""


class NotPositiveDefinite(TcadetError):
    """A matrix that must be positive definite has an eigenvalue at or below the cutoff."""


class DimensionMismatch(TcadetError):
    """Array or file dimensions disagree with the sampling grid."""


class FormatError(TcadetError):
    """A data file does not follow the documented text format."""


class InvalidWindow(TcadetError):
    """Moving-average window parameters are out of range."""


class QuadratureFailure(TcadetError):
    """The CDF integrator could not meet its accuracy target within budget."""


class DegenerateSignal(TcadetError):
    """An operation requires a nonzero signal but received all zeros."""


class ConfigError(TcadetError):
    """A scenario configuration failed validation."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
