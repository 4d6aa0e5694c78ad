"""Exception types shared across the package.

The CLI maps ValidationError (and plain ValueError) to exit code 2 and
NumericalError (and plain RuntimeError) to exit code 3.
"""


class ValidationError(ValueError):
    """Invalid input: bad geometry, misaligned grids, malformed configs."""


class DomainError(ValidationError):
    """A query outside the domain where a quantity is defined."""


class NumericalError(RuntimeError):
    """A computation failed or produced an unusable result."""


class WindowOverrunError(NumericalError):
    """A particle simulation window too small to give unbiased crossing times."""
