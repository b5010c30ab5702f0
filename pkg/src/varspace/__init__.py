"""Numerical laboratory for 2-microlocal Besov and Triebel-Lizorkin spaces
with variable exponents."""

__version__ = "0.1.0"

from .errors import (ConfigError, DataError, InvalidInputError, NumericError, PreconditionError,  # noqa: E402
                     VarspaceError)
from .grid import Grid, GridFunction, GridSequence  # noqa: E402

__all__ = [
    "__version__", "Grid", "GridFunction", "GridSequence",
    "VarspaceError", "InvalidInputError", "PreconditionError", "DataError", "NumericError", "ConfigError",
]
