"""Exception types shared across the package."""


class VarspaceError(Exception):
    """Base class for all package errors."""


class InvalidInputError(VarspaceError, ValueError):
    pass


class PreconditionError(VarspaceError, ValueError):
    pass


class DataError(VarspaceError, ValueError):
    """Raised when sampled data violates a structural requirement."""


class NumericError(VarspaceError, ArithmeticError):
    """A root bracket could not be established or a solver diverged."""


class ConfigError(VarspaceError, ValueError):
    pass
