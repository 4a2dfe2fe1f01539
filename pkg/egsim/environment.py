"""Synthetic ground truth: per-type spatial fields plus scheduled events."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from egsim.config import DIURNAL_PERIOD
from egsim.domain import Position, SensorType
from egsim.errors import ConfigurationError
from egsim.randomness import keyed_normal, stable_hash


@dataclass(frozen=True)
class FieldSpec:
    sensor_type: SensorType
    baseline: float
    diurnal_amplitude: float = 0.0
    noise_sigma: float = 0.0
    noise_corr_len: float = 50.0

    def __post_init__(self) -> None:
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0", field="noise_sigma")
        if not self.noise_corr_len > 0:
            raise ConfigurationError("noise_corr_len must be > 0", field="noise_corr_len")


@dataclass(frozen=True)
class EventSpec:
    event_id: str
    start: float
    duration: float
    center: Position
    radius: float
    intensity: Mapping[SensorType, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ConfigurationError(f"event {self.event_id}: duration must be > 0", field="duration")
        if not self.radius > 0:
            raise ConfigurationError(f"event {self.event_id}: radius must be > 0", field="radius")
        for sensor_type, delta in self.intensity.items():
            if delta < 0 or not math.isfinite(delta):
                raise ConfigurationError(
                    f"event {self.event_id}: intensity for {sensor_type} must be finite and >= 0",
                    field="intensity",
                )

    @property
    def end(self) -> float:
        return self.start + self.duration

    def is_active(self, t: float) -> bool:
        return self.start <= t < self.end

    def contribution(self, sensor_type: SensorType, pos: Position) -> float:
        """Linear radial falloff: full intensity at the centre, 0 at ``radius``."""
        delta = self.intensity.get(sensor_type, 0.0)
        if delta == 0.0:
            return 0.0
        return delta * max(0.0, 1.0 - pos.distance_to(self.center) / self.radius)


@dataclass(frozen=True)
class GroundTruthEvent:
    event_id: str
    start: float
    end: float


# Events actually active during a run, clipped to the run's end.
GroundTruthLog = list[GroundTruthEvent]


class NoiseSource:
    """Spatially correlated Gaussian noise as a stateless hash.

    The draw depends only on (seed, sensor type, grid cell at resolution
    ``noise_corr_len``, whole second), so nodes sharing a cell agree and any
    query can be repeated bit-for-bit.
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed

    def gaussian(self, spec: FieldSpec, pos: Position, t: float) -> float:
        if spec.noise_sigma == 0.0:
            return 0.0
        cx = math.floor(pos.x / spec.noise_corr_len)
        cy = math.floor(pos.y / spec.noise_corr_len)
        z = keyed_normal(self.seed, stable_hash(spec.sensor_type), cx, cy, math.floor(t))
        return spec.noise_sigma * z


def field_value(
    spec: FieldSpec,
    events: Sequence[EventSpec],
    pos: Position,
    t: float,
    noise_source: NoiseSource,
) -> float:
    """Ground-truth value of ``spec.sensor_type`` at ``pos`` and time ``t``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    value = spec.baseline + spec.diurnal_amplitude * math.sin(2.0 * math.pi * t / DIURNAL_PERIOD)
    for ev in events:
        if ev.is_active(t):
            value += ev.contribution(spec.sensor_type, pos)
    return value + noise_source.gaussian(spec, pos, t)


def event_active(events: Iterable[EventSpec], t: float) -> set[str]:
    """Ids of events with ``start <= t < start + duration``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return {ev.event_id for ev in events if ev.is_active(t)}


def ground_truth(events: Iterable[EventSpec], run_duration: float) -> GroundTruthLog:
    """Events that were active at some point in ``[0, run_duration)``."""
    log = [
        GroundTruthEvent(ev.event_id, ev.start, min(ev.end, run_duration))
        for ev in events
        if ev.start < run_duration
    ]
    return sorted(log, key=lambda g: (g.start, g.event_id))


class Environment:
    """All fields and events of a scenario, queried by sensor type."""

    def __init__(self, fields: Iterable[FieldSpec], events: Sequence[EventSpec], seed: int) -> None:
        self.fields = {f.sensor_type: f for f in fields}
        self.events = list(events)
        self.noise = NoiseSource(seed)

    def value(self, sensor_type: SensorType, pos: Position, t: float) -> float:
        spec = self.fields.get(sensor_type)
        if spec is None:
            raise ConfigurationError(f"no field defined for sensor type {sensor_type}", field="environment")
        return field_value(spec, self.events, pos, t, self.noise)

    def active_events(self, t: float) -> set[str]:
        return event_active(self.events, t)

    def event_present(self, sensor_type: SensorType, t: float) -> bool:
        """Whether an active event perturbs ``sensor_type`` at ``t``."""
        return any(ev.is_active(t) and ev.intensity.get(sensor_type, 0.0) != 0.0 for ev in self.events)
