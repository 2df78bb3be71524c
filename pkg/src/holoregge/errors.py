"""Exception hierarchy shared by every module of the package."""


class HoloReggeError(Exception):
    """Base class for all errors raised by holoregge."""


class NumericalFailure(HoloReggeError):
    """A computation could not deliver a trustworthy number."""


class ConfigError(HoloReggeError):
    """Malformed experiment configuration or input file."""


# gauge core
class DomainError(NumericalFailure):
    pass


class NonAbelianError(NumericalFailure):
    pass


class NotClosedError(HoloReggeError):
    pass


class InconsistentDerivativeError(NumericalFailure):
    pass


# holonomy identity
class OutOfRectangleError(DomainError):
    pass


class GaugeConditionError(NumericalFailure):
    pass


# regge calculus
class InvalidComplexError(ConfigError):
    pass


class NotRealizableError(NumericalFailure):
    pass


class BoundaryHingeError(HoloReggeError):
    pass


class NoConvergenceError(NumericalFailure):
    pass


# smoothing
class InvalidFanError(ConfigError):
    pass


class DegenerateSectorError(NumericalFailure):
    pass


class QuadratureResolutionError(NumericalFailure):
    pass


class SingularMetricError(NumericalFailure):
    pass


class RadiusTooSmallError(HoloReggeError):
    pass
