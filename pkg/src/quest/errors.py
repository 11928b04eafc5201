"""Exception types shared across the package.

The degeneracy family groups the data-dependent failure modes (critical
surfaces, repeated points, robust estimation running out of support) so
callers can distinguish "bad input data" from programming errors, which
raise plain ValueError.
"""


class QuestError(Exception):
    """Base class for all estimation failures."""


class InsufficientPointsError(QuestError):
    """Fewer correspondences than the operation requires."""


class InvalidCalibrationError(QuestError):
    """Calibration matrix is singular or otherwise unusable."""


class DegeneracyError(QuestError):
    """Base class for data-dependent degeneracies."""


class DegenerateTripleError(DegeneracyError):
    """A 3-point subset produced no usable constraint (e.g. repeated points)."""


class CriticalSurfaceError(DegeneracyError):
    """The 7-point solver detected a rank-deficient reduction, which happens
    when the scene points lie on a critical surface such as a plane."""

    def __init__(self, message, measured_rank=None, gap=None):
        super().__init__(message)
        self.measured_rank = measured_rank
        self.gap = gap


class DegenerateConfigurationError(DegeneracyError):
    """A solver's linear reduction lost rank for reasons other than the
    7-point critical-surface case."""


class ChiralityFailureError(DegeneracyError):
    """No decomposition hypothesis placed a majority of points in front of
    both cameras."""


class NoSolutionError(DegeneracyError):
    """A candidate-processing step received an empty candidate list."""


class RobustFailureError(DegeneracyError):
    """RANSAC found no candidate with at least a minimal set of inliers."""


class InfeasibleConfigError(QuestError):
    """Scene sampling kept violating the depth constraints."""
