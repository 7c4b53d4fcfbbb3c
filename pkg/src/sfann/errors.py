"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed input data: bad shapes, non-finite values, duplicates."""


class ConfigError(ValueError):
    """A parameter is outside the range an index can be built or queried with."""


class FormatError(InputError):
    """A serialized index is truncated, corrupt or from another format version."""
