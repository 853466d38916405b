"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` so the command-line front end can map
failures to stable process exit statuses without a lookup table.
"""

from __future__ import annotations


class FuchsconeError(Exception):
    """Base class for all library errors."""

    exit_code = 1

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details


# geometry kernels
class NonPositiveInput(FuchsconeError, ValueError):
    """A length or height is non-positive or below the degeneracy threshold."""


class NoSuchTrapezoid(FuchsconeError):
    """Heights differ by at least the upper edge length; no trapezoid exists."""


class DegenerateUpperTriangle(FuchsconeError):
    """Upper edge lengths violate the strict triangle inequality."""


class PrismNonexistent(FuchsconeError):
    """A lateral trapezoid or the spherical link of a prism cannot be formed."""


class QuadratureDidNotConverge(FuchsconeError):
    """The volume quadrature could not reach the requested tolerance."""


class NoSuchTriangle(FuchsconeError):
    """The two base angles and the base do not bound a hyperbolic triangle."""


class PreconditionViolated(FuchsconeError):
    """An operation was called outside the range where its contract holds."""


# surfaces and metrics
class ParseError(FuchsconeError):
    exit_code = 2


class InvariantViolation(FuchsconeError):
    """A structural or metric invariant fails."""


class TriangleInequalityViolated(InvariantViolation):
    pass


class NotConvex(InvariantViolation):
    pass


class UnflippableLoopConfiguration(FuchsconeError):
    """Both sides of the edge belong to the same triangle."""


class UnflippableConcaveQuad(FuchsconeError):
    """The quadrilateral around the edge is not strictly convex."""


# cone-manifolds
class FlipBudgetExceeded(FuchsconeError):
    pass


class UnflippableEdge(FuchsconeError):
    """A concave edge that cannot be flipped was met during canonicalization."""


# solvers
class NotStrictlyConvex(FuchsconeError):
    exit_code = 3


class LineSearchFailed(FuchsconeError):
    exit_code = 4


class MaxIterExceeded(FuchsconeError):
    exit_code = 5


class ContinuationStalled(FuchsconeError):
    exit_code = 4


# sweeps
class NoBigon(FuchsconeError):
    exit_code = 5


class PathNotEdge(FuchsconeError):
    exit_code = 5


class BudgetExceeded(FuchsconeError):
    exit_code = 5


class NotInImage(FuchsconeError):
    exit_code = 5


class NotTetrahedral(FuchsconeError):
    exit_code = 5


class NotShort(FuchsconeError):
    exit_code = 5
