"""Core value types and the relevance weighting of external data.

How much a peer network's data matters locally is split in two: a static
relevance weight ``rho`` (area distance and sensed-type coupling, here) and a
dynamic trust ``tau`` (kept by each gateway, see ``gateway.py``).
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from egsim.config import DEFAULT_D0
from egsim.errors import ConfigurationError

# Sensor types are plain names ("Temperature", "CO2", ...); the set in use is
# whatever the scenario's coupling matrix knows about.
SensorType = str


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: Position) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Measurement:
    """One timestamped sensor reading as it reaches a sink."""

    node_id: str
    sensor_type: SensorType
    value: float
    timestamp: float
    position: Position


@dataclass(frozen=True)
class RelevanceParams:
    d0: float = DEFAULT_D0

    def __post_init__(self) -> None:
        if not self.d0 > 0:
            raise ConfigurationError(f"d0 must be > 0, got {self.d0}", field="d0")


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric type-coupling coefficients ``kappa(a, b)`` in [0, 1].

    The diagonal is implicit (``kappa(t, t) == 1``) for every declared type.
    """

    types: frozenset[str]
    entries: Mapping[frozenset[str], float] = field(default_factory=dict)

    @classmethod
    def from_pairs(
        cls,
        types: Iterable[str],
        pairs: Iterable[tuple[str, str, float]] = (),
    ) -> CouplingMatrix:
        known = set(types)
        entries: dict[frozenset[str], float] = {}
        for a, b, kappa in pairs:
            known.update((a, b))
            if not 0.0 <= kappa <= 1.0 or math.isnan(kappa):
                raise ConfigurationError(
                    f"coupling ({a}, {b}) = {kappa} is outside [0, 1]", field="coupling"
                )
            key = frozenset((a, b))
            if a == b:
                if kappa != 1.0:
                    raise ConfigurationError(
                        f"coupling ({a}, {a}) must be 1, got {kappa}", field="coupling"
                    )
                continue
            if key in entries and entries[key] != kappa:
                raise ConfigurationError(
                    f"coupling ({a}, {b}) given twice with different values", field="coupling"
                )
            entries[key] = kappa
        return cls(types=frozenset(known), entries=entries)

    def has_pair(self, a: str, b: str) -> bool:
        if a not in self.types or b not in self.types:
            return False
        return a == b or frozenset((a, b)) in self.entries


def semantic_coupling(a: SensorType, b: SensorType, m: CouplingMatrix) -> float:
    """Return ``kappa(a, b)``; symmetric in its arguments."""
    if not m.has_pair(a, b):
        raise ConfigurationError(
            f"coupling matrix has no entry for pair ({a}, {b})", field=f"coupling[{a},{b}]"
        )
    if a == b:
        return 1.0
    return m.entries[frozenset((a, b))]


def relevance_weight(distance: float, coupling: float, p: RelevanceParams) -> float:
    """``rho = coupling * exp(-distance / d0)``."""
    if not math.isfinite(distance) or distance < 0:
        raise ValueError(f"distance must be finite and >= 0, got {distance}")
    if not 0.0 <= coupling <= 1.0:
        raise ValueError(f"coupling must be in [0, 1], got {coupling}")
    return coupling * math.exp(-distance / p.d0)


def centroid(positions: Iterable[Position]) -> Position:
    pts = np.array([(p.x, p.y) for p in positions], dtype=float)
    if pts.size == 0:
        raise ValueError("centroid of an empty position set")
    cx, cy = pts.mean(axis=0)
    return Position(float(cx), float(cy))


def centroid_distance(a: Iterable[Position], b: Iterable[Position]) -> float:
    """Euclidean distance between the centroids of two position sets."""
    return centroid(a).distance_to(centroid(b))
