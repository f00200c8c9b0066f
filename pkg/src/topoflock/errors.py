class DomainError(ValueError):
    """Input outside an operation's domain (bad shape, index, or parameter)."""


class SolverError(RuntimeError):
    """Root bracketing or convergence failure in the schedule solver."""
