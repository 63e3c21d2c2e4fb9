"""Exception types raised across the package."""


class CSNetError(Exception):
    """Base class for all package errors."""


class ShapeError(CSNetError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(CSNetError, ValueError):
    """An argument lies outside the domain of an operation."""


class UsageError(CSNetError, RuntimeError):
    """An API was called in an unsupported way."""


class InputError(CSNetError, ValueError):
    """Caller-supplied data violates a precondition (e.g. out-of-bounds coordinates)."""


class FormatError(CSNetError, ValueError):
    """A file on disk is malformed, truncated or of an unknown version."""


class TrainingError(CSNetError, RuntimeError):
    """Optimization diverged."""
