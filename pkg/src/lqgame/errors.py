"""Exception types shared across the solvers."""


class DomainError(ValueError):
    """An argument lies outside the set where the operation is defined."""


class SolverError(RuntimeError):
    """A numerical scheme produced a value that violates a known bound."""


class RefinementError(SolverError):
    """Mesh refinement hit its cap before reaching the requested tolerance.

    The last computed iterate and the distance achieved are kept on the
    exception so callers can still inspect or use them.
    """

    def __init__(self, message, last=None, distance=None):
        super().__init__(message)
        self.last = last
        self.distance = distance
