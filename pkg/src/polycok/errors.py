"""Exception types shared across the package."""


class ConformanceError(ValueError):
    """An element or matrix does not match the ring it is used with."""


class NotAUnit(ArithmeticError):
    """Raised when inverting an element of positive valuation."""


class BudgetExceeded(RuntimeError):
    """An enumeration would evaluate more objects than the configured cap."""

    def __init__(self, size, budget, what="matrices"):
        self.size = size
        self.budget = budget
        super().__init__(f"enumeration of {size} {what} exceeds budget {budget}")


class InvalidFiber(ValueError):
    """A fiber specification is malformed (wrong shape, level or entries)."""


class NoWitness(LookupError):
    """No residue matrix with the requested cokernel exists at this size."""
