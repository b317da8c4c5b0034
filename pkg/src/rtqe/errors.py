"""Exception hierarchy shared across the toolkit.

Three branches matter to callers (and to the CLI exit-code mapping):
config problems, data problems, and transport problems.
"""
from __future__ import annotations


class RtqeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RtqeError):
    """Invalid or inconsistent configuration; raised before any work starts."""


class DataError(RtqeError):
    """Malformed or missing input data."""


class TransportError(RtqeError):
    """HTTP backend failure (non-2xx response, connection error, bad payload)."""

    def __init__(self, message: str, status: int | None = None, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body
