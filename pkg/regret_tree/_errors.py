from __future__ import annotations


class RegretTreeError(Exception):
    """Base for every failure raised by regret_tree."""


class ConfigError(RegretTreeError, ValueError):
    """Invalid run configuration; the CLI exits with status 2."""


class MissingFileError(RegretTreeError, FileNotFoundError):
    pass


class SchemaMismatchError(RegretTreeError, ValueError):
    pass


class NonBinaryLabelError(RegretTreeError, ValueError):
    pass


class UnknownCategoryError(RegretTreeError, ValueError):
    pass


class InvalidDimensionError(RegretTreeError, ValueError):
    pass


class DegenerateSplitError(RegretTreeError, ValueError):
    pass


class EmptyTrainingSetError(RegretTreeError, ValueError):
    pass


class MinLeafExceedsDataError(RegretTreeError, ValueError):
    pass


class DimensionMismatchError(RegretTreeError, ValueError):
    pass


class EmptyEvalSetError(RegretTreeError, ValueError):
    pass


class TreeFileReadError(RegretTreeError):
    """Wraps an underlying parse failure while loading a serialized tree."""


class InvalidProbabilityError(RegretTreeError, ValueError):
    pass


class ZeroLeafSizeError(RegretTreeError, ValueError):
    pass


class InsufficientReplicationsError(RegretTreeError, ValueError):
    pass


class InsufficientRealizationsError(RegretTreeError, ValueError):
    pass


class LengthMismatchError(RegretTreeError, ValueError):
    pass


class SingleClassDataError(RegretTreeError, ValueError):
    pass


class EmptyScoresError(RegretTreeError, ValueError):
    pass


class EmptyGridError(RegretTreeError, ValueError):
    pass
