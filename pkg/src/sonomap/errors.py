"""Exception hierarchy.

Every error raised by the library derives from SonomapError so callers can
catch the whole family. Errors that point at a file carry enough context
(path, line or record index, offending id) to locate the problem.
"""


class SonomapError(Exception):
    """Base class for all library errors."""


# -- vector math ------------------------------------------------------------

class ZeroVector(SonomapError):
    """A vector with (near-)zero norm where a direction is required."""


class DimMismatch(SonomapError):
    """Two vectors or collections with incompatible dimensionality."""


class NotUnitNorm(SonomapError):
    """An operation requiring unit-norm input received a non-unit vector."""


class AntipodalVectors(SonomapError):
    """Spherical interpolation between opposite vectors is undefined."""


class WrongModality(SonomapError):
    """An embedding of the wrong modality was supplied."""


# -- store / file formats ---------------------------------------------------

class ParseError(SonomapError):
    """Malformed manifest, archive, ratings, or report content."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class DuplicateId(SonomapError):
    """The same asset id appears more than once."""


class OrphanEmbedding(SonomapError):
    """An archived embedding whose id is absent from the manifest."""


class UnknownScene(SonomapError):
    """A scene label that no manifest record carries."""


class UnknownId(SonomapError):
    """An asset id that the store does not contain."""


# -- synthetic generator ----------------------------------------------------

class InvalidConfig(SonomapError):
    """A synthetic-space configuration that violates its bounds."""


# -- ranking / retrieval ----------------------------------------------------

class EmptyCandidates(SonomapError):
    """Ranking requested over an empty candidate list."""


class NoAudioAssets(SonomapError):
    """Sonorization requested against a store with no audio embeddings."""


class AdapterFailure(SonomapError):
    """External adapter exited nonzero or timed out."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"adapter '{stage}': {message}")


class AdapterProtocolError(SonomapError):
    """External adapter produced output violating its contract."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"adapter '{stage}': {message}")


# -- evaluation harness -----------------------------------------------------

class EmptyRatings(SonomapError):
    """An aggregation over zero rating records."""


class UnknownFrame(SonomapError):
    """A rated frame id that cannot be resolved to a scene."""


class EmptyInput(SonomapError):
    """A histogram or reduction over an empty input."""


class LengthMismatch(SonomapError):
    """Paired series of unequal length."""


class DegenerateSeries(SonomapError):
    """A constant series has no defined Pearson correlation."""


class MissingMetric(SonomapError):
    """A rated (frame, audio) pair without a matching metric value."""


# -- rating service ---------------------------------------------------------

class EmptyPairList(SonomapError):
    """Session creation with no (frame, audio) pairs."""


class UnknownAsset(SonomapError):
    """A session pair referencing an id absent from the manifest."""


class UnknownSession(SonomapError):
    """A session id the service does not know."""


class OutOfOrder(SonomapError):
    """A rating submitted for a pair that is not the session's current item."""


class InvalidMos(SonomapError):
    """A MOS value outside the 1..5 integer scale."""
