"""Measurement quality, coverage, detection scoring and CSV output."""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from egsim.config import (
    COUNTS_COLUMNS,
    COUNTS_CSV,
    CSV_FLOAT_FORMAT,
    DEFAULT_GRACE,
    DEFAULT_GRID_RESOLUTION,
    EVENTS_COLUMNS,
    EVENTS_CSV,
    SUMMARY_COLUMNS,
    SUMMARY_CSV,
    TIMESERIES_COLUMNS,
    TIMESERIES_CSV,
)
from egsim.domain import Position
from egsim.environment import GroundTruthLog
from egsim.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class World:
    """Axis-aligned rectangle ``[0, width] x [0, height]`` in metres."""

    width: float
    height: float

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise ConfigurationError("world width and height must be > 0", field="world")

    def contains(self, pos: Position) -> bool:
        return 0.0 <= pos.x <= self.width and 0.0 <= pos.y <= self.height


@dataclass(frozen=True)
class QualityModel:
    ref_interval: float
    grid_resolution: float = DEFAULT_GRID_RESOLUTION
    w_c: float = 1.0
    w_f: float = 1.0
    w_d: float = 1.0

    def __post_init__(self) -> None:
        if not self.ref_interval > 0:
            raise ConfigurationError("ref_interval must be > 0", field="quality.ref_interval")
        if not self.grid_resolution > 0:
            raise ConfigurationError("grid_resolution must be > 0", field="quality.grid_resolution")
        if min(self.w_c, self.w_f, self.w_d) < 0:
            raise ConfigurationError("quality weights must be >= 0", field="quality")


# ── Coverage and quality ──────────────────────────────────────────────────


def _cell_centres(world: World, resolution: float) -> np.ndarray:
    xs = np.arange(resolution / 2.0, world.width, resolution)
    ys = np.arange(resolution / 2.0, world.height, resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _covered_masks(
    positions: Sequence[Position],
    radii: Sequence[float] | float,
    world: World,
    resolution: float,
) -> np.ndarray:
    """Boolean matrix: row i marks the cells within node i's radius."""
    cells = _cell_centres(world, resolution)
    pts = np.array([(p.x, p.y) for p in positions], dtype=float).reshape(-1, 2)
    r = np.broadcast_to(np.asarray(radii, dtype=float), (len(pts),))
    d2 = ((pts[:, None, :] - cells[None, :, :]) ** 2).sum(axis=2)
    return d2 <= (r[:, None] ** 2)


def coverage(
    positions: Sequence[Position],
    sensing_radius: Sequence[float] | float,
    world: World,
    resolution: float = DEFAULT_GRID_RESOLUTION,
) -> float:
    """Fraction of grid cell centres within range of at least one node."""
    if not positions:
        return 0.0
    masks = _covered_masks(positions, sensing_radius, world, resolution)
    return float(masks.any(axis=0).mean())


def coverage_profile(
    positions: Sequence[Position],
    radii: Sequence[float] | float,
    world: World,
    resolution: float = DEFAULT_GRID_RESOLUTION,
) -> list[float]:
    """Coverage of the first n positions, for n = 1..len(positions)."""
    if not positions:
        return []
    masks = _covered_masks(positions, radii, world, resolution)
    return [float(v) for v in np.logical_or.accumulate(masks, axis=0).mean(axis=1)]


def quality_from_coverage(c: float, interval: float, pdr: float, qm: QualityModel) -> float:
    """``Q = C^w_c * min(1, ref/interval)^w_f * pdr^w_d``."""
    if not interval > 0:
        raise ValueError(f"report interval must be > 0, got {interval}")
    freshness = min(1.0, qm.ref_interval / interval)
    return (c ** qm.w_c) * (freshness ** qm.w_f) * (pdr ** qm.w_d)


def quality(
    n_active: int,
    interval: float,
    pdr: float,
    positions: Sequence[Position],
    radii: Sequence[float] | float,
    world: World,
    qm: QualityModel,
) -> float:
    """Quality of running the first ``n_active`` of ``positions``."""
    if isinstance(radii, (int, float)):
        chosen_r: Sequence[float] | float = radii
    else:
        chosen_r = list(radii)[:n_active]
    c = coverage(list(positions)[:n_active], chosen_r, world, qm.grid_resolution)
    return quality_from_coverage(c, interval, pdr, qm)


# ── Detection scoring ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class EventDetection:
    event_id: str
    start: float
    end: float
    latency: float | None
    detecting_eg: str | None

    @property
    def detected(self) -> bool:
        return self.latency is not None


@dataclass(frozen=True)
class DetectionReport:
    events: list[EventDetection]
    false_alerts: int

    @property
    def detections(self) -> int:
        return sum(1 for e in self.events if e.detected)

    @property
    def misses(self) -> int:
        return sum(1 for e in self.events if not e.detected)

    @property
    def mean_latency(self) -> float | None:
        lat = [e.latency for e in self.events if e.latency is not None]
        return float(np.mean(lat)) if lat else None


def detection_latency(
    ground_truth: GroundTruthLog,
    alerts: Sequence[tuple[str, float]],
    grace: float = DEFAULT_GRACE,
) -> DetectionReport:
    """Score alerts against ground truth.

    An event's latency is its first alert in ``[start, end + grace]`` minus
    ``start``; alerts outside every such window are false alerts.
    """
    ordered = sorted(alerts, key=lambda a: (a[1], a[0]))
    results: list[EventDetection] = []
    for ev in ground_truth:
        hit = next(((eg, t) for eg, t in ordered if ev.start <= t <= ev.end + grace), None)
        if hit is None:
            results.append(EventDetection(ev.event_id, ev.start, ev.end, None, None))
        else:
            results.append(EventDetection(ev.event_id, ev.start, ev.end, hit[1] - ev.start, hit[0]))
    false_alerts = sum(
        1 for _eg, t in ordered
        if not any(ev.start <= t <= ev.end + grace for ev in ground_truth)
    )
    return DetectionReport(results, false_alerts)


# ── Run metrics ───────────────────────────────────────────────────────────


@dataclass
class NetworkCounts:
    accepted: int = 0
    rejected_syntactic: int = 0
    rejected_semantic: int = 0
    summaries_sent: int = 0
    summaries_delivered: int = 0
    summaries_dropped: int = 0
    dead_nodes: int = 0
    config_changes: int = 0
    degraded_plans: int = 0


@dataclass
class RunMetrics:
    """Per-tick time series plus per-network counters and alert log."""

    network_ids: list[str]
    eg_of: dict[str, str] = field(default_factory=dict)
    rows: list[tuple] = field(default_factory=list)
    alerts: list[tuple[str, float]] = field(default_factory=list)
    counts: dict[str, NetworkCounts] = field(default_factory=lambda: defaultdict(NetworkCounts))
    ground_truth: GroundTruthLog = field(default_factory=list)
    grace: float = DEFAULT_GRACE

    def record_tick(
        self,
        tick: int,
        network_id: str,
        power_w: float,
        energy_j: float,
        q: float,
        p: float,
        n_active: int,
        report_interval: float,
        alert: bool,
    ) -> None:
        self.rows.append(
            (tick, network_id, power_w, energy_j, q, p, n_active, report_interval, int(alert))
        )

    def timeseries(self) -> pd.DataFrame:
        df = pd.DataFrame(self.rows, columns=TIMESERIES_COLUMNS)
        return df.astype({"tick": "int64", "n_active": "int64", "alert": "int64",
                          "power_w": "float64", "energy_j": "float64", "q": "float64",
                          "p": "float64", "report_interval": "float64"})

    def total_energy(self, network_id: str) -> float:
        last = [r[3] for r in self.rows if r[1] == network_id]
        return last[-1] if last else 0.0

    def detection(self, eg_id: str | None = None) -> DetectionReport:
        alerts = self.alerts if eg_id is None else [a for a in self.alerts if a[0] == eg_id]
        return detection_latency(self.ground_truth, alerts, self.grace)


def _write(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def emit_csv(metrics: RunMetrics, destination: Path) -> list[Path]:
    """Write timeseries, events, summary and counts CSVs into ``destination``."""
    destination = Path(destination)
    try:
        destination.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {destination}: {exc}") from exc

    ts = metrics.timeseries().sort_values(["tick", "network_id"], kind="stable")

    overall = metrics.detection()
    events = pd.DataFrame(
        [
            (e.event_id, e.start, e.end, int(e.detected), e.latency, e.detecting_eg or "")
            for e in overall.events
        ],
        columns=EVENTS_COLUMNS,
    ).astype({"start": "float64", "end": "float64", "latency_s": "float64"})

    summary_rows = []
    for net in metrics.network_ids:
        sub = ts[ts["network_id"] == net]
        det = metrics.detection(metrics.eg_of.get(net, net))
        summary_rows.append((
            net,
            metrics.total_energy(net),
            float(sub["q"].mean()) if len(sub) else 0.0,
            det.detections,
            det.misses,
            det.false_alerts,
        ))
    summary = pd.DataFrame(summary_rows, columns=SUMMARY_COLUMNS).astype(
        {"total_energy_j": "float64", "mean_q": "float64"}
    )

    counts = pd.DataFrame(
        [
            (net, *vars(metrics.counts[net]).values())
            for net in metrics.network_ids
        ],
        columns=COUNTS_COLUMNS,
    )

    written = []
    for name, df in (
        (TIMESERIES_CSV, ts),
        (EVENTS_CSV, events),
        (SUMMARY_CSV, summary),
        (COUNTS_CSV, counts),
    ):
        path = destination / name
        try:
            _write(df, path)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)
    logger.info("Wrote %d CSV files to %s", len(written), destination)
    return written
