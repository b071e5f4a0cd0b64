"""Exception hierarchy shared by every level of the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class DimensionError(EngineError, ValueError):
    """Vector lengths or layouts disagree."""


class ArgumentError(EngineError, ValueError):
    """An argument is outside its allowed domain."""


class LookupFailure(EngineError, KeyError):
    """A named segment, channel, cell or footprint does not exist."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NoMatchError(EngineError):
    """A query reached a memory that holds nothing to match against."""


class FormatError(EngineError):
    """A file is malformed, truncated or carries the wrong magic."""


class VersionError(FormatError):
    """A model file was written by an unsupported format version."""


class ValidationError(EngineError, ValueError):
    """A loaded payload violates a model invariant."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
