"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent input (shapes, dimensions, weights)."""


class PreconditionError(ValueError):
    """Input is well formed but violates a documented precondition."""


class DomainError(ValueError):
    """Argument outside the domain of a function (e.g. a pole)."""


class ResourceError(RuntimeError):
    """A configured size cap would be exceeded."""


class SolverError(RuntimeError):
    """Numerical routine failed to converge or hit an internal inconsistency."""
