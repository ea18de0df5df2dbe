"""Exception hierarchy.

Three families, matched to CLI exit codes: validation errors (bad shapes,
bad parameters, mismatched inputs) exit 2, numerical errors (undefined
maps, degenerate data, non-convergent factorizations) exit 3, and data
I/O errors (unreadable or inconsistent files) exit 4.
"""


class GLRRError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GLRRError):
    """Invalid argument, shape, or configuration."""


class NumericalError(GLRRError):
    """Numerically undefined or degenerate computation."""


class DataIOError(GLRRError):
    """Malformed or inconsistent on-disk data."""


class ShapeError(ValidationError):
    """Matrix dimensions incompatible with the requested operation."""


class NotOrthonormal(ValidationError):
    """Matrix columns fail the orthonormality test."""


class BaseMismatch(ValidationError):
    """Tangent vectors anchored at different base points."""


class LengthMismatch(ValidationError):
    """Label vectors of unequal length."""


class RankDeficient(NumericalError):
    """Sample matrix has fewer significant directions than requested."""


class LogUndefined(NumericalError):
    """Subspace pair at or near the cut locus; the log map does not exist."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NumericalFailure(NumericalError):
    """Underlying factorization failed to converge."""


class DegenerateAffinity(NumericalError):
    """Affinity matrix carries no usable edge weight."""


class FormatError(DataIOError):
    """File violates its declared container format."""


class MissingLabels(DataIOError):
    """Dataset lacks the required label sidecar or entries."""


class StageFailure(GLRRError):
    """A pipeline stage failed; carries the stage name and root cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
