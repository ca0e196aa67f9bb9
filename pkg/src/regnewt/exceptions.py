"""Exception hierarchy shared by all regnewt modules."""


class RegNewtError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(RegNewtError, ValueError):
    pass


class UnsupportedOperatorError(RegNewtError):
    """The operation needs a dense materialization the operator lacks."""


class DomainError(RegNewtError, ValueError):
    """A filter argument lies outside the admissible spectral interval."""


class ScalingError(RegNewtError, ValueError):
    """An operator violates the norm bound ``||A|| <= 1/sqrt(2)``."""


class QualificationError(RegNewtError, ValueError):
    pass


class ScheduleCompatibilityError(RegNewtError, ValueError):
    pass


class ConfigurationError(RegNewtError, ValueError):
    pass


class IllPosedInstanceError(RegNewtError, ValueError):
    """The discretized boundary value problem is singular or indefinite."""


class DegenerateProblemError(RegNewtError, ValueError):
    pass


class InsufficientDataError(RegNewtError, ValueError):
    pass
