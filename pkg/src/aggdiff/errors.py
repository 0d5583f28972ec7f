"""Exception types shared across the package."""


class AggdiffError(Exception):
    """Base class for all package-specific errors."""


class GridError(AggdiffError, ValueError):
    """Invalid grid construction parameters."""


class FieldError(AggdiffError, ValueError):
    """Invalid field data (wrong shape, non-finite values, ...)."""


class ConfigError(AggdiffError, ValueError):
    """Invalid or malformed run configuration."""


class AdmissibilityError(AggdiffError, ValueError):
    """Inequality parameters outside the admissible range."""


class ResolutionError(AggdiffError, ValueError):
    """Field is not spectrally resolved for the requested operation."""


class RunAbort(AggdiffError, RuntimeError):
    """A time integration was aborted by a runtime monitor."""


class BoundaryMassViolation(RunAbort):
    """Mass reached the domain boundary: the periodic box is too small."""


class PositivityViolation(RunAbort):
    """The 2D spectral solution developed a significant negative part."""


class SweepFailure(AggdiffError, RuntimeError):
    """One or more rows of a parameter sweep aborted.

    The partial result is attached as ``.result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
