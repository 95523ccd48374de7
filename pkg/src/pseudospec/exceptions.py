"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`PseudospectraError`, so the CLI can map them to exit code 3 and
print the class name.
"""


class PseudospectraError(Exception):
    """Base class for all numerical / contract failures of the package."""


# core linear algebra
class DimensionTooLarge(PseudospectraError, ValueError):
    pass


class NotHermitian(PseudospectraError, ValueError):
    pass


class NoConvergence(PseudospectraError, ArithmeticError):
    pass


# Schur blocks
class NotTriangular(PseudospectraError, ValueError):
    pass


class DegenerateSwap(PseudospectraError, ValueError):
    """Equal diagonal entries coupled by a nonzero entry cannot be swapped."""


# singular-value field
class AtFaultPoint(PseudospectraError, ArithmeticError):
    """The smallest singular value is (numerically) multiple; no gradient."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class AtEigenvalue(PseudospectraError, ArithmeticError):
    pass


class MultiplicityUnstable(PseudospectraError, ArithmeticError):
    pass


# fault sets
class NotFullyCoupled(PseudospectraError, ValueError):
    pass


class RootRejected(PseudospectraError, ArithmeticError):
    pass


class NotNormal(PseudospectraError, ValueError):
    pass


class EigenvalueOnFaultCell(PseudospectraError, ArithmeticError):
    pass


# boundary tracing
class EmptyLevelSet(PseudospectraError, ValueError):
    """No crossing of ``s_n = delta`` on the sampled region.

    ``reason`` is ``"above"`` when ``s_n > delta`` everywhere on the grid
    (delta below the minimum over the region) and ``"below"`` when the
    whole region lies inside the pseudospectrum.
    """

    def __init__(self, message, reason):
        super().__init__(message)
        self.reason = reason


class StallAtSingularity(PseudospectraError, ArithmeticError):
    """Step size underflow while tracing; ``point`` is kept for classification."""

    def __init__(self, message, point, curve=None, direction=None):
        super().__init__(message)
        self.point = point
        self.curve = curve
        self.direction = direction


class CorrectorDivergence(PseudospectraError, ArithmeticError):
    pass


class UnclassifiablePoint(PseudospectraError, ArithmeticError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class UnclassifiablePointWarning(UserWarning):
    pass


# I/O
class MalformedMatrix(PseudospectraError, ValueError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column
