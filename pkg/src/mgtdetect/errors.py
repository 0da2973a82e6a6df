"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: ConfigError -> 2,
DataError (and subclasses) -> 3, OSError -> 4.
"""


class MgtError(Exception):
    """Base class for all package errors."""


class ConfigError(MgtError):
    """Invalid or inconsistent run configuration."""


class DataError(MgtError):
    """Malformed, degenerate, or missing data / model state."""


class EmptyDocument(DataError):
    """Document body is empty after normalization."""


class DegenerateSplit(DataError):
    """A train/val/test split received zero documents of some class."""


class EmptyEmbedding(DataError):
    """Embedding file declares zero vectors."""


class AurocUndefined(DataError):
    """AUROC requested but labels contain a single class."""


class ModelFormatError(DataError):
    """Persisted model file is corrupted or has an unsupported schema."""
