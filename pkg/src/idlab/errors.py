"""Exception types raised by the laboratory's numerical routines.

Each error names a specific contract violation so experiment code can tell a
malformed input apart from a genuine numerical failure.
"""

from __future__ import annotations

__all__ = [
    "IdlabError",
    "BracketFailure",
    "MismatchedFamily",
    "DimensionMismatch",
    "NonFiniteDerivative",
    "DegenerateMeans",
    "SingularMatrix",
    "RangeMismatch",
    "RankDeficient",
    "SingularCovariance",
    "UncertifiedTransform",
    "ConfigError",
]


class IdlabError(Exception):
    """Base class for all laboratory errors."""


class BracketFailure(IdlabError):
    """Quantile inversion could not bracket the requested probability."""


class MismatchedFamily(IdlabError):
    """Exponential-family operands do not share carrier, statistic and partition."""


class DimensionMismatch(IdlabError):
    """Array or object dimensions are incompatible."""


class NonFiniteDerivative(IdlabError):
    """A finite-difference derivative came out non-finite or non-positive."""


class DegenerateMeans(IdlabError):
    """Environment mean vectors coincide where distinct ones are required."""


class SingularMatrix(IdlabError):
    """A matrix that must be well conditioned is numerically singular."""


class RangeMismatch(IdlabError):
    """Two generators do not share their range, so no transform links them."""


class RankDeficient(IdlabError):
    """A design or statistic matrix has lower rank than the fit requires."""


class SingularCovariance(IdlabError):
    """A sample covariance matrix is not positive definite."""


class UncertifiedTransform(IdlabError):
    """A candidate indeterminacy transform failed its invariance re-check."""


class ConfigError(IdlabError):
    """An experiment configuration is malformed or names an unknown experiment."""
