"""Exception types shared across the package."""


class DomainError(ValueError):
    """A transform (MGF, CGF) was evaluated outside its domain of finiteness."""


class PreconditionError(ValueError):
    """An operation was invoked in a parameter regime where it is undefined."""


class ConvergenceError(RuntimeError):
    """An iterative solve failed to bracket or converge to the required tolerance."""


class GridError(ValueError):
    """A discretization grid is inconsistent (step does not tile the interval)."""


class ParseError(ValueError):
    """A distribution spec string does not match the mini-grammar."""
