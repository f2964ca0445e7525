"""Exception hierarchy shared by all modules."""


class LinsubError(Exception):
    """Base class for package errors."""


class DomainError(LinsubError, ValueError):
    """An argument lies outside the domain of an operation."""


class DimensionError(LinsubError, ValueError):
    """Operands live on incompatible Fock spaces."""


class SingularParameterError(DomainError):
    """A parameter choice makes a closed form singular (zero denominator)."""


class DegreeError(DomainError):
    """A polynomial has a vanishing leading coefficient or deficient degree."""


class NodeCollisionError(DomainError):
    """Interpolation nodes coincide."""


class InfeasibleError(LinsubError):
    """A target cannot be realised with the requested resources."""
