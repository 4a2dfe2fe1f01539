"""Gateway-to-gateway exchange: summary records and a lossy, delayed transport.

Only windowed summaries cross the overlay, one per gateway per decision
period. Delivery is scheduled into the destination's inbox and drained in
(arrival time, sender id) order.
"""

from __future__ import annotations

import heapq
import logging
import math
import struct
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, fields

import numpy as np

from egsim.domain import Measurement, Position, centroid
from egsim.errors import ConfigurationError

logger = logging.getLogger(__name__)

# window_start, window_end, mean, variance, count, anomaly_z, centroid x/y,
# coverage_radius, event_prob
_NUMERIC = struct.Struct(">ddddIddddd")


@dataclass(frozen=True)
class SummaryReport:
    eg_id: str
    sensor_type: str
    window_start: float
    window_end: float
    mean: float
    variance: float
    count: int
    anomaly_z: float
    centroid: Position
    coverage_radius: float
    event_prob: float

    # ── Canonical text record ──
    # One line of ``key=value`` pairs separated by ``;`` in field order, floats
    # with 6 decimals; the centroid is written as ``x,y``.

    def to_text(self) -> str:
        parts = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Position):
                text = f"{value.x:.6f},{value.y:.6f}"
            elif isinstance(value, float):
                text = f"{value:.6f}"
            else:
                text = str(value)
            parts.append(f"{f.name}={text}")
        return ";".join(parts)

    @classmethod
    def from_text(cls, line: str) -> SummaryReport:
        pairs = dict(item.split("=", 1) for item in line.strip().split(";"))
        cx, cy = pairs["centroid"].split(",")
        return cls(
            eg_id=pairs["eg_id"],
            sensor_type=pairs["sensor_type"],
            window_start=float(pairs["window_start"]),
            window_end=float(pairs["window_end"]),
            mean=float(pairs["mean"]),
            variance=float(pairs["variance"]),
            count=int(pairs["count"]),
            anomaly_z=float(pairs["anomaly_z"]),
            centroid=Position(float(cx), float(cy)),
            coverage_radius=float(pairs["coverage_radius"]),
            event_prob=float(pairs["event_prob"]),
        )

    # ── Binary record ──
    # u32 total length, then each field in order: strings as u16 length +
    # UTF-8, floats as f64, count as u32 (all big-endian).

    def to_bytes(self) -> bytes:
        def _s(text: str) -> bytes:
            raw = text.encode("utf-8")
            return struct.pack(">H", len(raw)) + raw

        body = b"".join([
            _s(self.eg_id),
            _s(self.sensor_type),
            _NUMERIC.pack(self.window_start, self.window_end, self.mean, self.variance,
                          self.count, self.anomaly_z, self.centroid.x, self.centroid.y,
                          self.coverage_radius, self.event_prob),
        ])
        return struct.pack(">I", len(body)) + body

    @classmethod
    def from_bytes(cls, data: bytes) -> SummaryReport:
        (length,) = struct.unpack_from(">I", data, 0)
        body = data[4:4 + length]
        offset = 0
        strings = []
        for _ in range(2):
            (n,) = struct.unpack_from(">H", body, offset)
            strings.append(body[offset + 2:offset + 2 + n].decode("utf-8"))
            offset += 2 + n
        ws, we, mean, var, count, z, cx, cy, radius, prob = _NUMERIC.unpack_from(body, offset)
        return cls(strings[0], strings[1], ws, we, mean, var, count, z,
                   Position(cx, cy), radius, prob)


@dataclass(frozen=True)
class OverlayLink:
    latency: float = 0.0
    loss: float = 0.0

    def __post_init__(self) -> None:
        if self.latency < 0:
            raise ConfigurationError("overlay latency must be >= 0", field="overlay.latency")
        if not 0.0 <= self.loss <= 1.0:
            raise ConfigurationError(f"overlay loss must be in [0, 1], got {self.loss}",
                                     field="overlay.loss")


def make_summary(
    accepted: Sequence[Measurement],
    eg_id: str,
    window: tuple[float, float],
    anomaly_z: float,
    p: float,
) -> SummaryReport | None:
    """Aggregate one window of accepted measurements; ``None`` when empty."""
    if not accepted:
        return None
    values = np.array([m.value for m in accepted], dtype=float)
    node_pos = {m.node_id: m.position for m in accepted}
    centre = centroid(node_pos.values())
    radius = max(centre.distance_to(pos) for pos in node_pos.values())
    return SummaryReport(
        eg_id=eg_id,
        sensor_type=accepted[0].sensor_type,
        window_start=float(window[0]),
        window_end=float(window[1]),
        mean=float(values.mean()),
        variance=float(values.var()),
        count=len(values),
        anomaly_z=float(anomaly_z),
        centroid=centre,
        coverage_radius=float(radius),
        event_prob=float(min(1.0, max(0.0, p))),
    )


class Inbox:
    """Single-owner delivery queue for one gateway."""

    def __init__(self) -> None:
        self._heap: list[tuple[float, str, int, SummaryReport]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def put(self, arrival: float, msg: SummaryReport) -> None:
        heapq.heappush(self._heap, (arrival, msg.eg_id, self._seq, msg))
        self._seq += 1

    def pop_due(self, t: float) -> list[SummaryReport]:
        """Remove and return messages due at or before ``t`` in (arrival, sender) order."""
        due = []
        while self._heap and self._heap[0][0] <= t:
            due.append(heapq.heappop(self._heap)[3])
        return due


def publish(
    link: OverlayLink,
    msg: SummaryReport,
    t: float,
    rng: np.random.Generator,
    inbox: Inbox | None = None,
) -> float | None:
    """Send ``msg`` over ``link``; returns the scheduled arrival or ``None`` if lost."""
    if rng.random() < link.loss:
        logger.debug("Overlay dropped summary from %s at t=%.0f", msg.eg_id, t)
        return None
    arrival = t + link.latency
    if inbox is not None:
        inbox.put(arrival, msg)
    return arrival


def drain(inbox: Inbox, t: float) -> list[SummaryReport]:
    return inbox.pop_due(t)


class Overlay:
    """Links between gateways plus every gateway's inbox."""

    def __init__(self, links: dict[tuple[str, str], OverlayLink], tick: float = 1.0) -> None:
        self.links = links
        self.tick = tick
        self.inboxes: dict[str, Inbox] = {}
        for src, dst in links:
            self.inboxes.setdefault(src, Inbox())
            self.inboxes.setdefault(dst, Inbox())
        self.sent = 0
        self.delivered = 0
        self.dropped = 0

    @classmethod
    def full_mesh(cls, eg_ids: Iterable[str], link: OverlayLink, tick: float = 1.0) -> Overlay:
        ids = sorted(eg_ids)
        links = {(a, b): link for a in ids for b in ids if a != b}
        ov = cls(links, tick)
        for eg in ids:
            ov.inboxes.setdefault(eg, Inbox())
        return ov

    def peers_of(self, eg_id: str) -> list[str]:
        return sorted(dst for src, dst in self.links if src == eg_id)

    def send(self, msg: SummaryReport, t: float, rngs: dict[tuple[str, str], np.random.Generator]) -> int:
        """Publish ``msg`` to every peer of its sender; returns how many were dropped."""
        dropped = 0
        for dst in self.peers_of(msg.eg_id):
            link = self.links[(msg.eg_id, dst)]
            self.sent += 1
            arrival = publish(link, msg, t, rngs[(msg.eg_id, dst)])
            if arrival is None:
                dropped += 1
                continue
            # Latencies round up to the next tick boundary.
            arrival = math.ceil(arrival / self.tick - 1e-9) * self.tick
            self.inboxes[dst].put(arrival, msg)
        self.dropped += dropped
        return dropped

    def deliver(self, eg_id: str, t: float) -> list[SummaryReport]:
        msgs = drain(self.inboxes.setdefault(eg_id, Inbox()), t)
        self.delivered += len(msgs)
        return msgs

    @property
    def queued(self) -> int:
        return sum(len(box) for box in self.inboxes.values())
