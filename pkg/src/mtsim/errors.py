class MtsimError(Exception):
    """Base class for recoverable simulator errors."""


class ConfigError(MtsimError, ValueError):
    """Invalid configuration: bad hierarchy, policy, flags or catalog entry."""


class CapacityError(ConfigError):
    """A snapshot or placement does not fit in a buffer pool."""


class TraceFormatError(MtsimError, ValueError):
    """Malformed or invalid trace / snapshot file."""


class ModelError(MtsimError, ValueError):
    """Inputs violate the analytical hierarchy model's assumptions."""
