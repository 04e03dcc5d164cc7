"""Exception types shared across the package."""


class UrbantierError(Exception):
    """Base class for all package errors."""


class DataError(UrbantierError):
    """Malformed or inconsistent input data."""


class ConfigError(UrbantierError):
    """Invalid configuration or missing required settings."""


class SchemaError(UrbantierError):
    """Feature schema mismatch between model and input."""


class FitError(UrbantierError):
    """Model fitting could not proceed (e.g. single-class target)."""


class ResamplingError(UrbantierError):
    """SMOTE preconditions violated."""
