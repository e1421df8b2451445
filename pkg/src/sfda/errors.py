"""Exception types raised across the package.

Two families matter to callers: :class:`DataError` (bad numbers, shapes or
labels) and :class:`FormatError` (unreadable or malformed files).  The CLI
maps them to different exit codes.
"""


class SfdaError(Exception):
    """Base class for every error raised by this package."""


class DataError(SfdaError, ValueError):
    """Input data violates a precondition."""


class FormatError(SfdaError):
    """A file on disk could not be parsed."""

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        parts = [message]
        if path is not None:
            parts.append(f"file={path}")
        if offset is not None:
            parts.append(f"offset={offset}")
        super().__init__(", ".join(parts))


# linear algebra
class DimensionMismatch(DataError):
    pass


class EmptyClass(DataError):
    pass


class NotPositiveDefinite(DataError, ArithmeticError):
    pass


# pipeline / ensemble
class SingleClassDominates(DataError):
    pass


class LabelMismatch(DataError):
    pass


class HeterogeneousProjection(DataError):
    pass


class KTooLarge(DataError):
    pass


class StageError(DataError):
    """A per-stage failure inside the two-stage scorer."""

    def __init__(self, stage, model_id, cause):
        self.stage = stage
        self.model_id = model_id
        self.cause = cause
        super().__init__(f"stage {stage} failed for model {model_id!r}: {cause}")


# rank evaluation
class LengthMismatch(DataError):
    pass


class ZeroVariance(DataError):
    pass


class IdMismatch(DataError):
    def __init__(self, missing_in_scores, missing_in_truth):
        self.missing_in_scores = sorted(missing_in_scores)
        self.missing_in_truth = sorted(missing_in_truth)
        super().__init__(
            "model ids differ between scores and ground truth: "
            f"only in ground truth={self.missing_in_scores}, "
            f"only in scores={self.missing_in_truth}"
        )


# file formats
class BadMagic(FormatError):
    pass


class VersionUnsupported(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class NonFiniteValue(FormatError):
    pass


class LabelOutOfRange(FormatError):
    def __init__(self, message, path=None, offset=None, index=None):
        self.index = index
        super().__init__(message, path=path, offset=offset)


class ManifestError(FormatError):
    pass


class SpecInvalid(DataError):
    pass
