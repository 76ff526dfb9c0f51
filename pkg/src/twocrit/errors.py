"""Exception hierarchy shared by all modules."""


class TwoCritError(Exception):
    """Base class for every error raised by the package."""


class NonConvergence(TwoCritError):
    """An iterative or adaptive procedure ran out of budget before meeting its tolerance."""


class DimensionTooSmall(TwoCritError, ValueError):
    pass


class DimensionNotSupported(TwoCritError, ValueError):
    pass


class DivergentConstant(TwoCritError):
    pass


class InvalidCoefficients(TwoCritError, ValueError):
    pass


class MeshGenerationFailure(TwoCritError):
    pass


class SingularGram(TwoCritError):
    pass


class NoNegativeEnd(TwoCritError):
    """Energy along the ray never became negative on the supplied grid."""


class NoConvergence(NonConvergence):
    """Eigen-solver flavour of :class:`NonConvergence`."""


class Stagnation(TwoCritError):
    pass


class ConfigError(TwoCritError, ValueError):
    pass
