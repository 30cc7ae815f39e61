"""Exception and warning types.

Validation problems (bad input files, inconsistent dimensions, unknown labels)
derive from :class:`ValidationError`; numerical failures derive from
:class:`NumericalError`.  The CLI maps the two families to distinct exit codes.
"""


class KronprecError(Exception):
    """Base class for all package errors."""


class ValidationError(KronprecError, ValueError):
    pass


class NumericalError(KronprecError, ArithmeticError):
    pass


# data ingestion
class MissingCell(ValidationError):
    pass


class DuplicateCell(ValidationError):
    pass


class NonNumericValue(ValidationError):
    pass


class RaggedTimeAxis(ValidationError):
    pass


class MissingWord(ValidationError):
    pass


class BadEnum(ValidationError):
    pass


class TooFewWords(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


# matrices and graphs
class DimensionMismatch(ValidationError):
    pass


class ZeroVariance(ValidationError):
    pass


class MissingAttribute(ValidationError):
    pass


class UnassignedVertex(ValidationError):
    pass


class VertexSetMismatch(ValidationError):
    pass


class DimTooLarge(ValidationError):
    pass


# numerics
class NotPositiveDefinite(NumericalError):
    pass


class SingularResidual(NumericalError):
    pass


# flagged conditions: results are still returned
class UnknownWord(UserWarning):
    """Metadata row for a word that does not occur in the tensor."""


class NoConvergence(RuntimeWarning):
    """Solver hit its iteration limit; the best iterate is returned."""


class NotEnoughEdges(UserWarning):
    """Fewer candidate edges than requested; all available edges are returned."""
