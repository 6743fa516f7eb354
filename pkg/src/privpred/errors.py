"""Exception types shared across the package."""


class PrivpredError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PrivpredError):
    """A data file line could not be parsed."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc = f"{loc}{line}: "
        elif loc:
            loc = f"{loc} "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


class SchemaError(PrivpredError):
    """Data violates a structural contract (field pattern, arity, study design)."""


class ReferentialIntegrityError(PrivpredError):
    """An edge references a user that was never declared."""


class VocabularyError(PrivpredError):
    """A categorical value falls outside its closed vocabulary."""


class EmptyDatasetError(PrivpredError):
    """An operation that needs at least one record received none."""


class ModelIntegrityError(PrivpredError):
    """A model file is truncated, corrupt, or structurally invalid."""


class ModelVersionError(PrivpredError):
    """A model file was written with an incompatible format version."""
