"""Exception hierarchy shared across the package."""


class DdhError(Exception):
    """Base class for all package errors."""

    category = "error"


class DimensionError(DdhError, ValueError):
    category = "dimension"


class DegenerateFitError(DdhError, ValueError):
    category = "degenerate-fit"


class DegenerateInputError(DdhError, ValueError):
    category = "degenerate-input"


class FormatError(DdhError, ValueError):
    category = "format"


class IoError(DdhError, OSError):
    category = "io"


class ConfigError(DdhError, ValueError):
    category = "config"
