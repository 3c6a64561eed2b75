"""Tools for GCD sums, GCD-matrix spectra and dilated function series."""

from .numtheory import DomainError, ParameterError
from .dilated import InvariantError

__version__ = "0.1.0"

__all__ = ["DomainError", "ParameterError", "InvariantError", "__version__"]
