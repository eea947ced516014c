"""Shared exception types."""


class ValidationError(ValueError):
    """Raised when an input value violates a documented precondition."""


class CalibrationError(ValueError):
    """Raised when glove calibration anchors are unusable."""


class ConfigError(ValueError):
    """Raised for malformed or contradictory configuration."""


class SessionNotFound(KeyError):
    """Raised when a session id is not present in the log store."""
