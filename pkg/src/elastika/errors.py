"""Exception and warning types shared across the package."""


class ElastikaError(Exception):
    """Base class for all library-specific errors."""


class AllZeroChannel(ElastikaError):
    """Reference channel is identically zero, so trimming is undefined."""


class TooFewSamples(ElastikaError):
    """A trial has too few samples for the requested operation."""


class ParseError(ElastikaError):
    """A data-file row could not be parsed."""


class SchemaError(ElastikaError):
    """A data file does not conform to the expected schema."""


class InvariantViolation(ElastikaError):
    """A domain object failed its structural invariants."""


class ChannelNotFound(ElastikaError, KeyError):
    """Requested channel name is not present."""


class GridMismatch(ElastikaError):
    """Operands live on different sample grids."""


class NonMonotoneWarp(ElastikaError):
    """Warp samples are not strictly increasing."""


class NegativePsi(ElastikaError):
    """Spherical warp representation has materially negative entries."""


class EmptyDataset(ElastikaError):
    """Operation requires more curves than the dataset provides."""


class IndexOutOfRange(ElastikaError, IndexError):
    """Mode index outside the decomposition's range."""


class SizeMismatch(ElastikaError):
    """Row or column counts of combined objects disagree."""


class NotNested(ElastikaError):
    """Reduced model is not a column subset of the full model."""


class SingularResample(ElastikaError):
    """Too large a fraction of bootstrap resamples was singular."""


class AllMissingTrait(ElastikaError):
    """A trait selected for imputation has no observed values."""


class NonMonotoneWarpWarning(UserWarning):
    """A reconstructed warp is not strictly increasing; output is flagged, not hidden."""
