"""Exception types shared across the package."""


class SwarmError(Exception):
    """Base class for all package errors."""


class DomainError(SwarmError, ValueError):
    """A value lies outside the domain of a model function or type."""


class FormatError(SwarmError, ValueError):
    """Malformed input bytes or text.

    ``offset`` is the byte offset (or line number for text formats, see
    ``line``) where parsing failed, when known.
    """

    def __init__(self, message, offset=None, line=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.offset = offset
        self.line = line


class ConfigError(FormatError):
    """Invalid configuration text."""
