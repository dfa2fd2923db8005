"""Errors raised when inputs leave the validity region of a formula or estimator.

The CLI maps every DomainError subclass to exit code 3; plain usage mistakes
are handled by argparse with exit code 2.
"""


class DomainError(ValueError):
    """Base class for numeric and domain errors."""


class NotPositiveSemidefinite(DomainError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class DegenerateSystem(DomainError):
    """A linear system or moment combination is singular."""


class InfiniteMoment(DomainError):
    """A required raw moment does not exist for the chosen law."""


class UnsupportedLaw(DomainError):
    """Radial law outside the supported family or parameter range."""


class NoInteriorOptimum(DomainError):
    """The error curve has no interior minimum in the split ratio."""
