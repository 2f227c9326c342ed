"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain of an operation (unknown id, bad parameter, broken precondition)."""


class DivergenceError(DomainError):
    """A requested integral or normalising constant is infinite."""
