"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`GraphonRDError`, which is itself a ``ValueError`` so callers that only
care about "bad input" can catch that.
"""


class GraphonRDError(ValueError):
    pass


# kernel
class AsymmetricInputError(GraphonRDError):
    pass


class NegativeEntryError(GraphonRDError):
    pass


class DegreeBoundViolatedError(GraphonRDError):
    pass


class NonFiniteKernelError(GraphonRDError):
    pass


class QuadratureFailureError(GraphonRDError):
    pass


class KernelOutOfUnitRangeError(GraphonRDError):
    pass


class PointOutOfDomainError(GraphonRDError):
    pass


class IncompatibleRepresentationsError(GraphonRDError):
    pass


class BruteForceLimitExceededError(GraphonRDError):
    pass


class UnknownFamilyError(GraphonRDError):
    pass


# gridfn
class InvalidExponentError(GraphonRDError):
    pass


class NotAMultipleError(GraphonRDError):
    pass


class NotADivisorError(GraphonRDError):
    pass


class NonFiniteResultError(GraphonRDError):
    pass


# dynamics
class DimensionMismatchError(GraphonRDError):
    pass


class NegativeTimeError(GraphonRDError):
    pass


class NonFiniteStateError(GraphonRDError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class InsufficientSamplesError(GraphonRDError):
    pass


class ContractionViolatedError(GraphonRDError):
    pass


class MassDriftError(GraphonRDError):
    pass


class MaxPrincipleViolatedError(GraphonRDError):
    pass


class CutNormUnavailableError(GraphonRDError):
    pass


class SemigroupCapExceededError(GraphonRDError):
    pass


class NotLipschitzError(GraphonRDError):
    """The reaction has no usable Lipschitz constant for the requested bound."""


# particles
class CapBelowInitialError(GraphonRDError):
    pass


class TimeOutOfRangeError(GraphonRDError):
    pass


class FamilyMismatchError(GraphonRDError):
    pass


# harness
class ConfigError(GraphonRDError):
    pass


class CapTruncationExcessiveError(GraphonRDError):
    pass
