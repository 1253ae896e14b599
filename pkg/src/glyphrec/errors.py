"""Exception hierarchy shared by every stage of the pipeline."""


class GlyphError(Exception):
    """Base class for all recoverable errors raised by glyphrec."""


class EmptyImage(GlyphError, ValueError):
    """Raised when an operation needs at least one object pixel."""


class DimensionMismatch(GlyphError, ValueError):
    """Raised when a vector does not have the dimension a model expects."""


class EmptyDataset(GlyphError, ValueError):
    pass


class SingleClassData(GlyphError, ValueError):
    pass


class NonPositiveC(GlyphError, ValueError):
    pass


class EmptyGrid(GlyphError, ValueError):
    pass


class AllZeroAccuracies(GlyphError, ValueError):
    pass


class NoSamples(GlyphError):
    pass


class BadLabel(GlyphError, ValueError):
    pass


class UnreadableImage(GlyphError):
    """Raised with the list of offending paths in ``paths``."""

    def __init__(self, message, paths=()):
        super().__init__(message)
        self.paths = list(paths)


class ClassTooSmall(GlyphError, ValueError):
    pass


class ConfigInvalid(GlyphError, ValueError):
    pass


class FormatError(GlyphError, ValueError):
    """Raised when a persisted file does not match its documented layout."""
