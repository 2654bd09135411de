"""Exception hierarchy.

Everything raised on bad data derives from :class:`TypodistError`, so the
CLI can map data problems to a single exit code.
"""


class TypodistError(Exception):
    """Base class for all data errors raised by this package."""


class MalformedCellError(TypodistError):
    """A matrix cell is not 0, 1, a decimal in [0, 1], or the missing marker."""


class MalformedRowError(TypodistError):
    """A row of a delimited file cannot be parsed."""


class DuplicateLanguageError(TypodistError):
    """The same language code appears twice within one file or matrix."""


class SchemaMismatchError(TypodistError):
    """Feature schemas or value domains are inconsistent for an operation."""


class AsymmetricReferenceError(TypodistError):
    """A reference distance store contains conflicting values for a pair."""


class ValueOutOfRangeError(TypodistError):
    """A distance or cell value lies outside its permitted range."""


class EmptyListError(TypodistError):
    """A language-subset file contains no entries."""


class LanguageSetMismatchError(TypodistError):
    """Two matrices that must cover the same languages do not."""


class UnknownLanguageError(TypodistError):
    """A queried language code is absent from the relevant matrix."""


class UnknownMetricError(TypodistError):
    """A distance name or modifier is not recognised."""


class InsufficientNeighborsError(TypodistError):
    """kNN imputation needs at least one candidate language besides the target."""


class MissingReferenceError(TypodistError):
    """No reference distances are loaded for the requested feature class."""


class MissingAggregateError(TypodistError):
    """No aggregated matrix is available for the requested combination."""


class MissingMetaError(TypodistError):
    """Language metadata required by the operation is absent."""


class EmptySubsetError(TypodistError):
    """A language subset resolved to zero languages."""


class NotFoundError(TypodistError):
    """A dataset directory or required file does not exist."""


class CorruptDataError(TypodistError):
    """A dataset file exists but cannot be read as its declared format."""
