"""Exception hierarchy shared across the package."""


class RevrecError(Exception):
    """Base class for all package-specific errors."""


class UnknownApp(RevrecError):
    """Referenced app_id is not registered in the store."""


class SchemaViolation(RevrecError):
    """Input file does not look like the expected record schema."""


class VersionMismatch(RevrecError):
    """On-disk store has an unknown or unreadable format version."""


class EmptyCorpus(RevrecError):
    """An operation requires at least one document and got none."""


class EmptySet(RevrecError):
    """Overlap rate is undefined for an empty reference set."""


class EmptyTextEmbedding(RevrecError):
    """Text cleans down to zero tokens and cannot be embedded."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class SidecarUnavailable(RevrecError):
    """Embedding sidecar could not be reached or failed mid-request."""


class DimensionMismatch(RevrecError):
    """Vectors of different dimensions cannot be compared."""


class ZeroVector(RevrecError):
    """Cosine similarity is undefined for a zero vector."""


class MissingLabels(RevrecError):
    """A ground-truth pair has no relevance labels."""


class NoDecidedRecommendations(RevrecError):
    """Lead-time statistics need at least one decided recommendation."""
