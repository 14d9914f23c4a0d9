"""Exception hierarchy shared by all mmdist modules."""


class MMDistError(Exception):
    """Base class for all package errors."""


class InvalidSpaceError(MMDistError, ValueError):
    """A finite mm-space violates one of its structural invariants."""


class SpaceFormatError(MMDistError, ValueError):
    """A space file could not be parsed into the expected JSON schema."""


class SizeLimitError(MMDistError):
    """An exact solver refused an instance above its configured size limit."""


class InternalInvariantError(MMDistError):
    """A solver produced output that fails its own certificate checks."""
