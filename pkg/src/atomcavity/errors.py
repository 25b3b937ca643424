"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A physical rate, count, or amplitude is out of its allowed range."""


class DimensionError(ValueError):
    """Matrix or state dimensions are inconsistent with the requested operation."""


class BasisError(ValueError):
    """A two-mode state carries the wrong basis tag for the requested operation."""


class SingularStructureError(RuntimeError):
    """No steady state exists within tolerance (the generator has no null vector)."""


class AmbiguousSteadyStateError(RuntimeError):
    """The generator has more than one steady state."""

    def __init__(self, null_dimension: int):
        self.null_dimension = null_dimension
        super().__init__(f"steady state is not unique: null space has dimension {null_dimension}")


class LiouvillianSizeError(ValueError):
    """Requested Hilbert space is too large for a dense superoperator."""


class TruncationError(RuntimeError):
    """Fock-space truncation is too severe for the requested drive."""


class TruncationWarning(UserWarning):
    """Noticeable population in the top Fock level; results may be truncation-limited."""


class ResolventConditioningError(RuntimeError):
    """The shifted generator is singular or near-singular at the probe frequency."""


class UndefinedPolarizationError(ValueError):
    """Both field components vanish; polarization state is undefined."""


class UndefinedPhaseError(ValueError):
    """The coherence whose argument defines the phase is numerically zero."""


class NonInvertibleSlopeError(ValueError):
    """Fitted slope lies outside the invertible range of the phase-per-photon relation."""


class InsufficientDataError(ValueError):
    """Too few data points for the requested fit."""


class UnphysicalStateError(ValueError):
    """Density matrix violates Hermiticity, unit trace, or positivity beyond tolerance."""


class ConfigError(ValueError):
    """Run configuration is invalid or references missing files."""
