"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition."""


class NumericError(ArithmeticError):
    """A numerical routine failed (e.g. an eigensolver did not converge)."""
