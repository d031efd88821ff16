"""Exception hierarchy shared by all evaluation routes."""


class HumbertError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HumbertError, ValueError):
    """Argument outside the domain of the requested route."""


class OutOfDomain(DomainError):
    """Series route asked to sum outside its convergence domain."""


class NonConvergent(HumbertError, ArithmeticError):
    """Series did not settle within its term cap."""


class SingularParameter(HumbertError, ValueError):
    """A lower parameter is a non-positive integer."""


class PoleError(DomainError):
    pass


class ParameterPole(DomainError):
    """Excluded integer parameter combination hit by an asymptotic formula."""


class RegimeError(DomainError):
    """No asymptotic branch applies to the given arguments."""


class QuadratureNotConverged(HumbertError, ArithmeticError):
    pass


class SingularPoint(DomainError):
    """Laplace image evaluated on (or too near) one of its singularities."""


class ContourError(HumbertError):
    """Inversion contour does not separate the image's singularities."""


class NotConverged(HumbertError, ArithmeticError):
    """Node doubling in the inverse Laplace transform failed to settle."""


class NoBracket(HumbertError, ValueError):
    """Constraint residual has no sign change on the bracket."""
