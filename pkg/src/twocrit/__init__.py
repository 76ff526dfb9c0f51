"""Numerics for elliptic problems with a critical interior term and a critical trace term.

Submodules: ``quadrature`` (adaptive Gauss-Kronrod rules on unbounded and
iterated domains), ``constants`` (best Sobolev constants and compactness
thresholds), ``bubbles`` (concentrating extremal profiles), ``nonlinearity``
(perturbation catalogue and condition classifier), ``mesh`` / ``functional``
(axisymmetric P1 discretisation of the energy), ``mountainpass`` (minimax
path deformation) and ``cli``.
"""

from .errors import (ConfigError, DimensionNotSupported, DimensionTooSmall, DivergentConstant,
                     InvalidCoefficients, MeshGenerationFailure, NoConvergence, NoNegativeEnd,
                     NonConvergence, SingularGram, Stagnation, TwoCritError)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DimensionNotSupported", "DimensionTooSmall", "DivergentConstant",
    "InvalidCoefficients", "MeshGenerationFailure", "NoConvergence", "NoNegativeEnd",
    "NonConvergence", "SingularGram", "Stagnation", "TwoCritError", "__version__",
]
