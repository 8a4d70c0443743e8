"""Exception hierarchy.

Every failure the pipeline can diagnose raises a subclass of
:class:`NeurobandError`, so callers can catch the whole family or a single
condition.
"""


class NeurobandError(Exception):
    """Base class for all errors raised by this package."""


# ingestion
class IngestError(NeurobandError):
    pass


class MalformedHeader(IngestError):
    pass


class TruncatedData(IngestError):
    pass


class HeterogeneousRate(IngestError):
    pass


class DegenerateScaling(IngestError):
    pass


class RaggedRows(IngestError):
    pass


class NonNumericCell(IngestError):
    pass


class EmptyFile(IngestError):
    pass


class UnknownLabel(IngestError):
    pass


class DuplicatePath(IngestError):
    pass


class EmptyManifest(IngestError):
    pass


# preprocessing
class PreprocessError(NeurobandError):
    pass


class IrrationalRatio(PreprocessError):
    pass


class NonPositiveRate(PreprocessError):
    pass


class BandOutOfRange(PreprocessError):
    pass


class RecordingTooShort(PreprocessError):
    pass


# spectral / wavelet
class SpectralError(NeurobandError):
    pass


class SegmentTooLong(SpectralError):
    pass


class NoCompleteSegment(SpectralError):
    pass


class ResolutionTooCoarse(SpectralError):
    pass


class GridDoesNotCoverBand(SpectralError):
    pass


class SignalShorterThanFilter(SpectralError):
    pass


class LevelOutOfRange(SpectralError):
    pass


class EmptyIntervals(SpectralError):
    pass


# features / splitting
class FeatureError(NeurobandError):
    pass


class EmptyEpochList(FeatureError):
    pass


class TooFewSubjects(FeatureError):
    pass


class ClassMissing(FeatureError):
    pass


class SubjectLeakage(FeatureError):
    """A subject occurs in more than one partition."""


# classifiers
class ModelError(NeurobandError):
    pass


class TooFewRows(ModelError):
    pass


class DegenerateMatrix(ModelError):
    pass


class ClassTooSmall(ModelError):
    pass


class SingularCovariance(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class EmptyTrainingSet(ModelError):
    pass


class BadHyperparameters(ModelError):
    pass


class EmptyGrid(ModelError):
    pass


class SchemaMismatch(ModelError):
    """A model file does not match the supported schema version or kind."""


# metrics
class MetricsError(NeurobandError):
    pass


class LabelOutOfRange(MetricsError):
    pass


class AllOneClass(MetricsError):
    pass


# attention diagnostics
class AttentionError(NeurobandError):
    pass


class AllZeroMap(AttentionError):
    pass


class LengthMismatch(AttentionError):
    pass


class MissingOutcomeGroup(AttentionError):
    pass


class ShapeMismatch(AttentionError):
    pass


class MalformedAttentionFile(AttentionError):
    pass


class ConfigError(NeurobandError):
    pass
