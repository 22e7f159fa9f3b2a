"""Exception hierarchy for the covstream package.

Two broad families matter to callers: :class:`DataError` for problems with
inputs (bad files, wrong shapes, not enough material to work with) and
:class:`NumericalError` for computations that cannot proceed (singular
matrices, collapsed weights, non-finite values). The CLI maps these to exit
codes 2 and 3 respectively.
"""
from __future__ import annotations


class CovstreamError(Exception):
    """Base class for all covstream errors."""


class DataError(CovstreamError):
    """Input data is unusable (missing, malformed, or inconsistent)."""


class NumericalError(CovstreamError):
    """A numerical routine cannot produce a valid result."""


class InsufficientFramesError(DataError):
    """Fewer frames than the operation needs."""


class DegenerateSkeletonError(DataError):
    """Skeleton normalization is impossible (reference joints coincide)."""


class DimensionMismatchError(DataError):
    """Operands have incompatible dimensions."""


class AffinityUndefinedError(DataError):
    """The affinity graph cannot be built (fewer than two classes)."""


class FormatError(DataError):
    """A file does not follow its declared format."""


class DegenerateWeightsError(NumericalError):
    """The weight pattern leaves a single effective frame."""


class DegenerateStateError(NumericalError):
    """An update rule's denominator collapsed (all prior weight vanished)."""


class NumericalFaultError(NumericalError):
    """A non-finite value appeared where a finite one is required."""


class NotPositiveDefiniteError(NumericalError):
    """A matrix required to be positive definite is not."""


class IrreparablySingularError(NumericalError):
    """Regularization failed to restore positive definiteness."""


class InseparableSynthesisError(NumericalError):
    """Synthetic class generators could not be separated."""
