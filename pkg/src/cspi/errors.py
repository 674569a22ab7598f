"""Exception and warning types raised across the package."""


class CSPIError(Exception):
    """Base class for all package errors."""


class InvalidArgument(CSPIError, ValueError):
    pass


class AmbiguousCutoff(CSPIError):
    """A spectral cutoff sits on an eigenvalue; perturb the threshold."""

    def __init__(self, threshold, eigenvalue):
        self.threshold = threshold
        self.eigenvalue = eigenvalue
        super().__init__(
            f"cutoff {threshold!r} coincides with eigenvalue {eigenvalue!r} "
            "within 1e-12; perturb delta"
        )


class TruncationError(CSPIError):
    """Fock truncation too small for the requested phase-space point."""

    def __init__(self, defect, message=None):
        self.defect = defect
        super().__init__(message or f"Fock truncation defect {defect:.3e} exceeds 1e-6")


class ResolutionError(CSPIError):
    """A grid does not resolve the object it is sampling."""


class DomainError(CSPIError):
    """Quadrature domain too small, or a point outside a transform's domain."""


class CompositionError(CSPIError):
    """Intermediate Gaussian block is not integrable."""

    def __init__(self, eigenvalue):
        self.eigenvalue = eigenvalue
        super().__init__(
            f"intermediate block not integrable: eigenvalue with real part {eigenvalue.real:.3e}"
        )


class UnsupportedBackend(CSPIError):
    pass


class FitQualityError(CSPIError):
    pass


class ConfigError(CSPIError):
    pass


class QualityWarning(UserWarning):
    """Monte Carlo estimate dominated by its own noise (sign problem)."""
