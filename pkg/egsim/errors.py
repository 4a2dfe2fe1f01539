"""Exception types shared across the simulator."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """A scenario or parameter set is invalid.

    ``field`` names the offending setting and ``location`` (``file:line``)
    points at it in the scenario file when known.
    """

    def __init__(self, message: str, field: str | None = None, location: str | None = None) -> None:
        self.message = message
        self.field = field
        self.location = location
        parts = [message]
        if field:
            parts.append(f"[field: {field}]")
        if location:
            parts.append(f"[at {location}]")
        super().__init__(" ".join(parts))


class ScenarioParseError(ConfigurationError):
    """The scenario file is not well-formed XML."""


class InsufficientHistoryError(ValueError):
    """Fewer baseline values than a z-score needs."""


class InsufficientLiveNodesError(RuntimeError):
    """More active nodes were requested than are still alive."""

    def __init__(self, requested: int, live: int) -> None:
        self.requested = requested
        self.live = live
        super().__init__(f"requested {requested} active nodes but only {live} are alive")
