"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its documented range or malformed."""


class InconsistentCountsError(ValueError):
    """Count tables violate a physical consistency requirement (e.g. C > S)."""


class InvalidStreamError(ValueError):
    """An event stream is unsorted or out of its declared time range."""


class ThresholdBracketError(RuntimeError):
    """Bisection predicate does not bracket a threshold on [0, 1]."""
