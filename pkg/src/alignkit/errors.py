"""Exception hierarchy shared by all alignkit modules."""


class AlignkitError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AlignkitError):
    """A record could not be decoded (malformed JSON, wrong field type)."""


class ValidationError(AlignkitError):
    """A decoded record violates a data invariant (bounds, overlap, coverage)."""


class UsageError(AlignkitError):
    """An operation was called with arguments outside its contract."""


class UndefinedResultError(UsageError):
    """The requested quantity is mathematically undefined for this input."""
