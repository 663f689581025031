"""Exception types shared across the package."""


class PrecodingError(Exception):
    """Base class for all errors raised by this package."""


class SingularMatrix(PrecodingError):
    """A linear system could not be solved because a pivot is (near) zero."""


class NotHermitian(PrecodingError):
    """A matrix that must be Hermitian is asymmetric beyond tolerance."""


class DegenerateInstance(PrecodingError):
    """The problem instance carries no usable information (for example, an
    all-zero data vector, or no candidate correlated with the MRT direction)."""


class ZeroCorrelation(PrecodingError):
    """A candidate vector is orthogonal to the MRT direction, so the
    fractional objective is undefined for it (searches treat this as +inf)."""


class InstanceTooLarge(PrecodingError):
    """Exhaustive enumeration was requested above the guard size."""


class ParseError(PrecodingError):
    """An instance file is malformed."""
