"""Exception taxonomy shared across the toolkit.

Every error callers are expected to catch and branch on has its own class.
File-format errors carry the byte offset where parsing failed.
"""


class DepthlabError(Exception):
    """Base class for all toolkit errors."""


class FormatError(DepthlabError):
    """A depth file could not be parsed.  `offset` is the failing byte position."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class MalformedHeader(FormatError):
    pass


class DimensionOverflow(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class IoFailure(DepthlabError):
    pass


class UnrepresentableValue(DepthlabError):
    pass


class DuplicateImageId(DepthlabError):
    pass


class MissingFile(DepthlabError):
    pass


class DegenerateFit(DepthlabError):
    """Fit or normalization is undefined: too few valid pixels or zero spread."""


class TooSmallForScales(DepthlabError):
    pass


class ZeroVector(DepthlabError):
    pass


class MissingCounterpart(DepthlabError):
    pass


class InvalidPixel(DepthlabError):
    pass


class UnlabeledPair(DepthlabError):
    pass


class DegenerateCamera(DepthlabError):
    pass


class UnknownAnnotator(DepthlabError):
    pass


class LeaseExpired(DepthlabError):
    pass


class DuplicateSubmission(DepthlabError):
    pass


class ConfigError(DepthlabError):
    pass
