"""
Domain exceptions.

Everything raised on purpose by the toolkit derives from NefToolkitError.
InputError subclasses describe malformed input (CLI exit 2, HTTP 400); the
remaining classes are structured domain failures (CLI exit 1, HTTP 422).
"""

from typing import Optional


class NefToolkitError(Exception):
    """Base class for structured failures."""


class InputError(NefToolkitError):
    """Malformed or inconsistent input.

    Attributes:
        field: dotted path of the offending input field, when known
    """

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class DimensionMismatchError(InputError):
    pass


class EmptyPolytopeError(InputError):
    pass


class InvalidClassesError(InputError):
    pass


class InvalidBlockSelectionError(InputError):
    pass


class MissingValueError(InputError):
    pass


# ---------------------------------------------------------------------------
# Polytopes
# ---------------------------------------------------------------------------

class UnboundedPolytopeError(NefToolkitError):
    pass


class UnboundedDualError(NefToolkitError):
    pass


class NotIntegralError(NefToolkitError):
    pass


# ---------------------------------------------------------------------------
# Nef-partitions and mirror data
# ---------------------------------------------------------------------------

class NefPartitionError(NefToolkitError):
    """A nef-partition clause is violated.

    Attributes:
        clause: short name of the violated clause
        part: 0-based index of the offending part, if the clause is per-part
    """

    clause = "nef-partition"

    def __init__(self, message: str, part: Optional[int] = None):
        super().__init__(message)
        self.part = part


class MissingOriginError(NefPartitionError):
    clause = "origin"


class ZeroPartError(NefPartitionError):
    clause = "nonzero"


class NotReflexiveError(NefPartitionError):
    clause = "reflexive"


class InvalidTranslationError(NefToolkitError):
    pass


# ---------------------------------------------------------------------------
# Character table and graph
# ---------------------------------------------------------------------------

class StructuralInconsistencyError(NefToolkitError):
    pass


class ClassificationConflictError(NefToolkitError):
    pass


class PairingInconsistencyError(NefToolkitError):
    pass


class Assumption1Failure(NefToolkitError):
    pass


# ---------------------------------------------------------------------------
# Numerics
# ---------------------------------------------------------------------------

class PerronConvergenceError(NefToolkitError):
    pass


class DegenerateBlockError(NefToolkitError):
    """A singleton block whose only term is a single monomial.

    Such a block never vanishes on the torus, which is evidence that the
    corresponding open set is empty.
    """

    def __init__(self, message: str, block: int):
        super().__init__(message)
        self.block = block


class NotInOmegaError(NefToolkitError):
    pass


class SamplingFailureError(NefToolkitError):
    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts
