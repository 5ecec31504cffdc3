"""Exception types raised across the package."""


class ValidationError(ValueError):
    """Input failed a precondition (shape, finiteness, range)."""


class DimensionError(ValidationError):
    """Sample sizes or dimensions are incompatible or too small."""


class DegenerateScaleError(ValueError):
    """A scale estimate (MAD) is zero, so standardization is meaningless."""


class ConditioningError(ValueError):
    """A scatter matrix is too close to singular to be inverted safely."""


class ExactFitError(RuntimeError):
    """Every candidate subset of the MCD search had a singular scatter."""


class ObjectiveError(RuntimeError):
    """The objective returned a non-finite value.

    The offending point is kept on ``self.point``.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class GenerationError(RuntimeError):
    """A rejection sampler exhausted its draw budget."""
