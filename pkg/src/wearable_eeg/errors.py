"""Exception types shared across the toolkit."""


class EegToolkitError(Exception):
    """Base class for toolkit errors."""


class SchemaError(EegToolkitError, ValueError):
    """A file does not match its declared schema (columns, header, layout)."""


class DataError(EegToolkitError, ValueError):
    """Recording or feature data violate an invariant (non-finite, ragged, ...)."""


class ConfigError(EegToolkitError, ValueError):
    """A configuration file or spec is invalid."""


class ConvergenceError(EegToolkitError, RuntimeError):
    """An iterative solver hit its iteration cap before meeting its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
