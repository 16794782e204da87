"""Shared exception types."""

from __future__ import annotations


class StoryGraphError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(StoryGraphError):
    """A value breaks a structural rule (bad id, self-loop, empty graph...)."""


class NotFoundError(StoryGraphError):
    """A referenced node, edge, session or resource does not exist."""


class DuplicateEdgeError(StoryGraphError):
    """An identical (src, dst, kind) edge is already present."""


class IntegrityError(StoryGraphError):
    """A document references entities it does not define."""


class ParseError(StoryGraphError):
    """A document is malformed. ``location`` points at the offending field."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location


class UnknownDimensionError(StoryGraphError):
    """A behavior-dimension id is not part of the dimension vocabulary."""


class NoEliteError(StoryGraphError):
    """A grid cell holds no feasible elite to inspect or adopt."""
