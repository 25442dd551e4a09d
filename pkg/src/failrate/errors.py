"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class DegenerateVarianceError(ArithmeticError):
    """The Wald variance estimate is undefined (a group has zero events)."""


class InfeasiblePlanError(RuntimeError):
    """No observation length or interval count can reach the requested error rates."""

    def __init__(self, message, plateau=None):
        super().__init__(message)
        self.plateau = plateau
