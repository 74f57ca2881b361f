"""Exception types shared across the package."""


class UniproxError(Exception):
    """Base class for all package errors."""


class NonConvergence(UniproxError):
    """An inner iterative solver failed to reach its target accuracy."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ContractViolation(UniproxError):
    """A bundle update produced a model violating its defining conditions."""


class DomainError(UniproxError, ValueError):
    """Arguments outside the domain of a formula."""


class MissingDiameter(UniproxError, ValueError):
    """A bound needs the domain diameter but the instance does not declare one."""


class MissingMeta(UniproxError, ValueError):
    """A checker needs instance metadata (e.g. an optimal solution) that is absent."""


class BadSpec(UniproxError, ValueError):
    """Invalid instance family specification."""


class BudgetExhausted(UniproxError):
    """A solve ran out of its inner-iteration budget."""
