"""Exception types shared across the package."""


class QArrivalError(Exception):
    """Base class for all package errors."""


class ConfigError(QArrivalError):
    """Invalid scenario configuration (bad key, value, or mode combination)."""


class ModeError(QArrivalError):
    """Operation called in the wrong detector/source mode."""


class GridMismatchError(QArrivalError):
    """Two series passed to a solver do not share the same time grid."""


class SingularFamilyError(QArrivalError):
    """Family ratio H_n requested at a point where F_n vanishes."""


class RangeError(QArrivalError):
    """Requested value lies outside the invertible range (NO-event branch)."""


class ToleranceError(QArrivalError):
    """Quadrature failed to reach the requested tolerance.

    Carries the best available estimate so callers can decide whether to
    proceed anyway.
    """

    def __init__(self, message, estimate=None, achieved=None):
        super().__init__(message)
        self.estimate = estimate
        self.achieved = achieved
