"""Exception types shared across the solver modules."""


class CknError(Exception):
    """Base class for solver-specific failures."""


class NonConvergenceError(CknError):
    """An iterative solve exhausted its budget without meeting tolerance."""


class NormalizationError(CknError):
    """An input potential missed its required unit q-norm."""


class PositivityError(CknError):
    """A computed ground state violated sign-definiteness."""


class SymmetricStableError(CknError):
    """No descent direction exists: the symmetric solution is locally stable."""


class SymmetricFallbackError(CknError):
    """A saddle descent returned to the symmetric solution."""


class StepFailureError(CknError):
    """Branch continuation could not advance even at the minimum step."""


class AmbiguousCrossingError(CknError):
    """Curve intersection was not unique; all candidates are attached."""

    def __init__(self, message, crossings):
        super().__init__(message)
        self.crossings = crossings


class ConfigError(CknError):
    """Invalid run configuration."""


class CheckpointError(CknError):
    """A field checkpoint was missing, corrupt, or mismatched."""
