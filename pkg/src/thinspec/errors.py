"""Exception types and warning categories shared across the package."""


class ThinspecError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ThinspecError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class OffsetTooDeep(ThinspecError):
    """Coating thickness reaches or exceeds the curvature reach of the curve."""


class InversionFailed(ThinspecError):
    """Newton projection into tube coordinates did not converge."""


class MeshFailure(ThinspecError):
    """Mesh generation produced a degenerate or inverted triangle."""


class LayerUnderResolved(ThinspecError):
    """Fewer than two element rows across the coating."""


class ConvergenceFailure(ThinspecError):
    """Iterative eigensolver exhausted its iteration budget."""


class SolveSingular(ThinspecError):
    """Augmented (constrained) linear system is numerically singular."""


class NoRootInBracket(ThinspecError):
    """Determinant sign scan found no root in the search interval."""


class NoRootFound(ThinspecError):
    """Pencil scan found no singular point; carries the scan record."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan


class MissingLayer(ThinspecError):
    """Operation requires a mesh with a coating region."""


class FactorizationFailure(ThinspecError):
    """Sparse factorization failed (matrix exactly singular)."""


class NearDegenerate(ThinspecError):
    """Leading Dirichlet eigenvalue is not numerically simple."""


class BelowLambda0(ThinspecError):
    """Measured eigenvalue lies below the leading Dirichlet eigenvalue."""


class InsufficientData(ThinspecError):
    """Not enough points for a least-squares order fit."""


class ConfigError(ThinspecError):
    """Run configuration failed validation; carries field diagnostics."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class MagnitudeWarning(UserWarning):
    """Requested value is near a singularity and loses relative accuracy."""
