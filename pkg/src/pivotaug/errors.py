"""Exception types shared across the toolkit.

Anything deriving from ``ValidationError`` maps to CLI exit code 1; plain
``OSError`` maps to exit code 2.
"""


class PivotError(Exception):
    """Base class for toolkit errors."""


class ValidationError(PivotError, ValueError):
    """Input data or parameters violate a documented contract."""


class EmbeddingFormatError(ValidationError):
    """Problem in an embedding text file; carries the 1-based line number."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class EmptyFileError(EmbeddingFormatError):
    pass


class MalformedHeaderError(EmbeddingFormatError):
    pass


class ArityError(EmbeddingFormatError):
    pass


class NonNumericError(EmbeddingFormatError):
    pass


class TruncatedFileError(EmbeddingFormatError):
    pass


class ZeroNormError(ValidationError):
    def __init__(self, token):
        self.token = token
        super().__init__(f"cannot normalize zero-norm vector for token {token!r}")


class EmptySeedError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    pass


class ProcrustesError(ValidationError):
    pass


class CslsParameterError(ValidationError):
    pass


class SegmentationError(ValidationError):
    pass


class LineCountMismatchError(ValidationError):
    def __init__(self, what, left, right):
        self.left = left
        self.right = right
        super().__init__(f"{what}: line counts differ ({left} vs {right})")


class ManifestError(ValidationError):
    pass
