"""The Enhanced Gateway: monitor, analyze, plan and execute for one network.

Each decision period the gateway

1. filters the reports that reached its sink (syntactic then semantic checks),
2. updates trust in every peer whose summary arrived, by comparing anomaly
   z-scores (unit-free, so a CO2 network can be compared to a temperature one),
3. turns local readings and trusted, relevance-weighted peer summaries into an
   event probability (noisy-OR over threshold evidence, optionally a kNN over
   labelled history),
4. picks the cheapest (active nodes, report interval) meeting the quality the
   probability calls for, and
5. publishes its own summary for the peers.

Static relevance ``rho`` (distance, type coupling) and dynamic trust ``tau``
multiply into the weight of each peer.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from egsim.config import (
    DEFAULT_ALERT_MAX_INTERVAL,
    DEFAULT_CORROBORATION_HORIZON,
    DEFAULT_DECISION_PERIOD,
    DEFAULT_DELTA_MAX,
    DEFAULT_FILTER_WINDOW,
    DEFAULT_HISTORY_CAPACITY,
    DEFAULT_HYSTERESIS,
    DEFAULT_INTERVAL_SET,
    DEFAULT_KNN_K,
    DEFAULT_MIN_CORROBORATION,
    DEFAULT_P_ALERT,
    DEFAULT_Q_MAX,
    DEFAULT_Q_MIN,
    DEFAULT_SUMMARY_TTL_PERIODS,
    DEFAULT_TAU0,
    DEFAULT_TRUST_ALPHA,
    DEFAULT_WINDOW_MAX_AGE,
    DEFAULT_Z_MAX,
    DIURNAL_PERIOD,
    MIN_Z_WINDOW,
    Z_CLIP,
    Z_EPSILON,
)
from egsim.domain import Measurement, Position
from egsim.errors import ConfigurationError, InsufficientHistoryError
from egsim.metrics import QualityModel, World, coverage_profile, quality_from_coverage
from egsim.overlay import SummaryReport, make_summary
from egsim.wsn import EnergyModel, LinkModel, NetworkConfig, energy_rate

logger = logging.getLogger(__name__)


# ── Monitor ───────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class ValueBounds:
    value_min: float
    value_max: float
    max_rate: float

    def __post_init__(self) -> None:
        if not self.value_min < self.value_max:
            raise ConfigurationError("value_min must be < value_max", field="filter.bounds")
        if not self.max_rate > 0:
            raise ConfigurationError("max_rate must be > 0", field="filter.max_rate")


@dataclass(frozen=True)
class FilterRules:
    bounds: Mapping[str, ValueBounds]
    z_max: float = DEFAULT_Z_MAX
    window: int = DEFAULT_FILTER_WINDOW
    max_age: float = DEFAULT_WINDOW_MAX_AGE
    min_corroboration: int = DEFAULT_MIN_CORROBORATION
    corroboration_horizon: float = DEFAULT_CORROBORATION_HORIZON

    def __post_init__(self) -> None:
        if not self.z_max > 0:
            raise ConfigurationError("z_max must be > 0", field="filter.z_max")
        if self.window < MIN_Z_WINDOW:
            raise ConfigurationError(f"window must be >= {MIN_Z_WINDOW}", field="filter.window")
        if self.min_corroboration == 1 or self.min_corroboration < 0:
            raise ConfigurationError(
                "min_corroboration must be 0 (off) or >= 2", field="filter.min_corroboration"
            )


class RejectReason(str, Enum):
    NON_FINITE = "non_finite"
    UNKNOWN_TYPE = "unknown_type"
    OUT_OF_RANGE = "out_of_range"
    RATE = "rate_of_change"
    OUTLIER = "outlier"

    @property
    def category(self) -> str:
        if self in (RejectReason.NON_FINITE, RejectReason.UNKNOWN_TYPE, RejectReason.OUT_OF_RANGE):
            return "Syntactic"
        return "Semantic"


@dataclass
class FilterStats:
    accepted: int = 0
    by_reason: dict[RejectReason, int] = field(default_factory=dict)

    def record(self, accepted: int, rejected: Iterable[tuple[Measurement, RejectReason]]) -> None:
        self.accepted += accepted
        for _m, reason in rejected:
            self.by_reason[reason] = self.by_reason.get(reason, 0) + 1

    def rejected(self, category: str | None = None) -> int:
        return sum(n for r, n in self.by_reason.items() if category is None or r.category == category)


@dataclass
class MonitorHistory:
    """Per-node accepted windows plus recent outliers, owned by one gateway."""

    window: int = DEFAULT_FILTER_WINDOW
    values: dict[str, deque[tuple[float, float]]] = field(default_factory=dict)
    outliers: dict[str, tuple[float, int]] = field(default_factory=dict)
    batch_z: list[float] = field(default_factory=list)

    def node_window(self, node_id: str) -> deque[tuple[float, float]]:
        if node_id not in self.values:
            self.values[node_id] = deque(maxlen=self.window)
        return self.values[node_id]


def anomaly_z(value: float, baseline_window: Sequence[float]) -> float:
    """Standard score of ``value`` against a baseline (sample std, floored)."""
    if len(baseline_window) < MIN_Z_WINDOW:
        raise InsufficientHistoryError(
            f"need {MIN_Z_WINDOW} baseline values, got {len(baseline_window)}"
        )
    arr = np.asarray(baseline_window, dtype=float)
    std = float(arr.std(ddof=1))
    return (value - float(arr.mean())) / max(std, Z_EPSILON)


def clip_z(z: float) -> float:
    return max(-Z_CLIP, min(Z_CLIP, z))


def _corroborated(history: MonitorHistory, rules: FilterRules, node_id: str, t: float, sign: int) -> bool:
    history.outliers[node_id] = (t, sign)
    if rules.min_corroboration == 0:
        return False
    agreeing = sum(
        1 for ts, s in history.outliers.values()
        if s == sign and abs(t - ts) <= rules.corroboration_horizon
    )
    return agreeing >= rules.min_corroboration


def monitor_filter(
    batch: Sequence[Measurement],
    rules: FilterRules,
    history: MonitorHistory,
) -> tuple[list[Measurement], list[tuple[Measurement, RejectReason]]]:
    """Split ``batch`` into accepted readings and (reading, first failing reason).

    Checks in order: finite value, known type and physical range
    (syntactic); per-node rate of change, then z-score against the node's
    trailing accepted window (semantic). A z outlier shared by enough other
    nodes within the corroboration horizon is a real change, not a fault,
    and is accepted.
    """
    accepted: list[Measurement] = []
    rejected: list[tuple[Measurement, RejectReason]] = []
    history.batch_z = []

    for m in batch:
        if not math.isfinite(m.value):
            rejected.append((m, RejectReason.NON_FINITE))
            continue
        bounds = rules.bounds.get(m.sensor_type)
        if bounds is None:
            rejected.append((m, RejectReason.UNKNOWN_TYPE))
            continue
        if not bounds.value_min <= m.value <= bounds.value_max:
            rejected.append((m, RejectReason.OUT_OF_RANGE))
            continue

        win = history.node_window(m.node_id)
        if win and m.timestamp - win[-1][0] > rules.max_age:
            win.clear()
        if win:
            last_t, last_v = win[-1]
            dt = m.timestamp - last_t
            if dt > 0 and abs(m.value - last_v) / dt > bounds.max_rate:
                rejected.append((m, RejectReason.RATE))
                continue

        z: float | None = None
        if len(win) >= MIN_Z_WINDOW:
            base = [v for _t, v in win]
            if float(np.std(base, ddof=1)) >= Z_EPSILON:
                z = anomaly_z(m.value, base)
                if abs(z) > rules.z_max and not _corroborated(
                    history, rules, m.node_id, m.timestamp, 1 if z > 0 else -1
                ):
                    rejected.append((m, RejectReason.OUTLIER))
                    continue

        win.append((m.timestamp, m.value))
        accepted.append(m)
        if z is not None:
            history.batch_z.append(clip_z(z))

    for m, reason in rejected:
        logger.debug("Rejected %s from %s at t=%.0f (%s/%s)",
                     m.value, m.node_id, m.timestamp, reason.category, reason.value)
    return accepted, rejected


# ── Trust ─────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class TrustParams:
    alpha: float = DEFAULT_TRUST_ALPHA
    delta_max: float = DEFAULT_DELTA_MAX
    tau0: float = DEFAULT_TAU0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError("trust alpha must be in (0, 1]", field="trust.alpha")
        if not self.delta_max > 0:
            raise ConfigurationError("delta_max must be > 0", field="trust.delta_max")
        if not 0.0 <= self.tau0 <= 1.0:
            raise ConfigurationError("tau0 must be in [0, 1]", field="trust.tau0")


@dataclass(frozen=True)
class TrustRecord:
    peer_id: str
    trust: float
    updates: int = 0
    last_score: float = 0.0


def update_trust(rec: TrustRecord, z_local: float, z_external: float, params: TrustParams) -> TrustRecord:
    """EMA of the agreement score ``max(0, 1 - |z_ext - z_local| / delta_max)``."""
    if not (math.isfinite(z_local) and math.isfinite(z_external)):
        raise ValueError("z-scores must be finite")
    delta = abs(z_external - z_local)
    score = max(0.0, 1.0 - delta / params.delta_max)
    tau = (1.0 - params.alpha) * rec.trust + params.alpha * score
    return TrustRecord(rec.peer_id, min(1.0, max(0.0, tau)), rec.updates + 1, score)


# ── Analyze ───────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class ThresholdRamp:
    theta_low: float
    theta_high: float

    def __post_init__(self) -> None:
        if not self.theta_low < self.theta_high:
            raise ConfigurationError("theta_low must be < theta_high", field="thresholds")


def evidence(value: float, th: ThresholdRamp) -> float:
    return min(1.0, max(0.0, (value - th.theta_low) / (th.theta_high - th.theta_low)))


def infer_threshold(
    local_evidences: Iterable[float],
    external: Iterable[tuple[float, float, float]],
) -> float:
    """Noisy-OR of local evidence (weight 1) and ``tau * rho``-weighted peers."""
    miss = 1.0
    for e in local_evidences:
        miss *= 1.0 - e
    for e, tau, rho in external:
        miss *= 1.0 - tau * rho * e
    return 1.0 - miss


FeatureVector = tuple[float, float, float, float, float]


def build_features(
    local_z: Sequence[float],
    external: Sequence[tuple[float, float]],
    t: float,
) -> FeatureVector:
    """(mean local z, max local z, weighted peer z, sin and cos of time of day).

    ``external`` holds (peer z, tau * rho) pairs.
    """
    if not local_z:
        raise InsufficientHistoryError("no local z-scores this period")
    total_w = sum(w for _z, w in external)
    ext = sum(z * w for z, w in external) / total_w if total_w > 0 else 0.0
    phase = 2.0 * math.pi * t / DIURNAL_PERIOD
    return (float(np.mean(local_z)), float(max(local_z)), float(ext), math.sin(phase), math.cos(phase))


class HistoryStore:
    """Bounded ring buffer of labelled feature vectors, oldest first."""

    def __init__(self, capacity: int = DEFAULT_HISTORY_CAPACITY) -> None:
        if capacity < 1:
            raise ConfigurationError("history capacity must be >= 1", field="history.capacity")
        self.capacity = capacity
        self._entries: deque[tuple[FeatureVector, bool]] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._entries)

    def add(self, fv: Sequence[float], label: bool) -> None:
        if not all(math.isfinite(x) for x in fv):
            return
        self._entries.append((tuple(float(x) for x in fv), bool(label)))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([fv for fv, _ in self._entries], dtype=float).reshape(-1, 5)
        y = np.array([lab for _, lab in self._entries], dtype=bool)
        return x, y


def infer_pattern(fv: Sequence[float], store: HistoryStore, k: int = DEFAULT_KNN_K) -> float | None:
    """Share of positive labels among the ``k`` nearest stored vectors.

    Returns ``None`` (fall back to thresholds) while fewer than ``k`` entries
    exist. Distance ties go to the older entry.
    """
    if len(store) < k:
        return None
    x, y = store.arrays()
    d = np.linalg.norm(x - np.asarray(fv, dtype=float), axis=1)
    nearest = np.argsort(d, kind="stable")[:k]
    return float(y[nearest].sum()) / k


class InferenceMode(str, Enum):
    THRESHOLD_ONLY = "ThresholdOnly"
    PATTERN_ONLY = "PatternOnly"
    MAX = "Max"


def combine_inference(p_threshold: float, p_pattern: float | None, mode: InferenceMode) -> float:
    if mode is InferenceMode.THRESHOLD_ONLY or p_pattern is None:
        return p_threshold
    if mode is InferenceMode.PATTERN_ONLY:
        return p_pattern
    return max(p_threshold, p_pattern)


# ── Plan ──────────────────────────────────────────────────────────────────


class AppType(str, Enum):
    EVENT_DRIVEN = "EventDriven"
    MONITORING = "Monitoring"
    HYBRID = "Hybrid"


@dataclass(frozen=True)
class PlannerConfig:
    interval_set: tuple[float, ...] = DEFAULT_INTERVAL_SET
    q_min: float = DEFAULT_Q_MIN
    q_max: float = DEFAULT_Q_MAX
    app_type: AppType = AppType.MONITORING
    p_alert: float = DEFAULT_P_ALERT
    alert_max_interval: float = DEFAULT_ALERT_MAX_INTERVAL
    alert_min_nodes: int | None = None

    def __post_init__(self) -> None:
        if not self.interval_set:
            raise ConfigurationError("interval_set must not be empty", field="interval_set")
        if list(self.interval_set) != sorted(set(self.interval_set)) or self.interval_set[0] <= 0:
            raise ConfigurationError(
                "interval_set must be strictly ascending positive values", field="interval_set"
            )
        if not 0.0 <= self.q_min < self.q_max <= 1.0:
            raise ConfigurationError("need 0 <= q_min < q_max <= 1", field="planner.q_min")
        if not 0.0 <= self.p_alert <= 1.0:
            raise ConfigurationError("p_alert must be in [0, 1]", field="planner.p_alert")
        if self.alert_min_nodes is not None and self.alert_min_nodes < 1:
            raise ConfigurationError("alert_min_nodes must be >= 1", field="planner.alert_min_nodes")

    @property
    def alert_capable(self) -> bool:
        return self.app_type in (AppType.EVENT_DRIVEN, AppType.HYBRID)

    def min_alert_nodes(self, total_nodes: int) -> int:
        """``alert_min_nodes``, or half the network rounded up when unset."""
        if self.alert_min_nodes is not None:
            return self.alert_min_nodes
        return max(1, math.ceil(total_nodes / 2))


def quality_required(p: float, cfg: PlannerConfig) -> float:
    return cfg.q_min + p * (cfg.q_max - cfg.q_min)


@dataclass(frozen=True)
class PlanResult:
    config: NetworkConfig
    quality: float
    energy: float
    degraded: bool = False


def plan(
    p: float,
    total_nodes: int,
    positions: Sequence[Position],
    radii: Sequence[float],
    cfg: PlannerConfig,
    em: EnergyModel,
    link: LinkModel,
    qm: QualityModel,
    world: World,
) -> PlanResult:
    """Cheapest (n, interval) meeting the required quality, by exhaustive search.

    ``positions``/``radii`` list live nodes in activation order, so the first
    n are the ones that would run. Ties: higher quality, fewer nodes, longer
    interval. When nothing is feasible the max-effort configuration is
    returned flagged as degraded.
    """
    if total_nodes < 1:
        raise ValueError("planning needs at least one live node")
    q_req = quality_required(p, cfg)
    alerting = cfg.alert_capable and p >= cfg.p_alert
    min_nodes = cfg.min_alert_nodes(total_nodes)
    cover = coverage_profile(list(positions)[:total_nodes], list(radii)[:total_nodes],
                             world, qm.grid_resolution)

    best: PlanResult | None = None
    best_key: tuple[float, float, int, float] | None = None
    for n in range(1, total_nodes + 1):
        for interval in cfg.interval_set:
            q = quality_from_coverage(cover[n - 1], interval, link.pdr, qm)
            if q < q_req:
                continue
            if alerting and (interval > cfg.alert_max_interval or n < min_nodes):
                continue
            candidate = NetworkConfig(n, interval, alerting)
            power = energy_rate(candidate, total_nodes, em)
            key = (power, -q, n, -interval)
            if best_key is None or key < best_key:
                best, best_key = PlanResult(candidate, q, power), key

    if best is not None:
        return best
    fallback = NetworkConfig(total_nodes, cfg.interval_set[0], p >= cfg.p_alert)
    q = quality_from_coverage(cover[-1], fallback.report_interval, link.pdr, qm)
    return PlanResult(fallback, q, energy_rate(fallback, total_nodes, em), degraded=True)


# ── Gateway ───────────────────────────────────────────────────────────────


class GatewayFaultKind(str, Enum):
    BIAS = "bias"
    STUCK = "stuck"


@dataclass(frozen=True)
class GatewayFault:
    """Misbehaviour applied to the summaries a gateway publishes."""

    kind: GatewayFaultKind
    magnitude: float = 0.0
    onset: float = 0.0


@dataclass(frozen=True)
class NetworkView:
    """What the gateway knows about its own network when planning."""

    positions: list[Position]
    radii: list[float]
    em: EnergyModel
    link: LinkModel
    world: World

    @property
    def live(self) -> int:
        return len(self.positions)


@dataclass
class TickOutcome:
    config_change: NetworkConfig | None = None
    summary: SummaryReport | None = None
    alerts: list[float] = field(default_factory=list)
    p: float = 0.0
    p_pattern: float | None = None
    accepted: int = 0
    rejected_syntactic: int = 0
    rejected_semantic: int = 0
    degraded: bool = False


@dataclass(frozen=True)
class GatewaySettings:
    rules: FilterRules
    thresholds: Mapping[str, ThresholdRamp]
    trust: TrustParams = TrustParams()
    planner: PlannerConfig = PlannerConfig()
    quality: QualityModel | None = None
    mode: InferenceMode = InferenceMode.MAX
    decision_period: float = DEFAULT_DECISION_PERIOD
    history_capacity: int = DEFAULT_HISTORY_CAPACITY
    k: int = DEFAULT_KNN_K
    hysteresis: float = DEFAULT_HYSTERESIS
    summary_ttl: float | None = None
    fault: GatewayFault | None = None

    def __post_init__(self) -> None:
        if not self.decision_period > 0:
            raise ConfigurationError("decision_period must be > 0", field="decision_period")
        if self.k < 1:
            raise ConfigurationError("k must be >= 1", field="history.k")
        if self.history_capacity < 1:
            raise ConfigurationError("history capacity must be >= 1", field="history.capacity")

    @property
    def quality_model(self) -> QualityModel:
        return self.quality or QualityModel(ref_interval=self.planner.interval_set[0])

    @property
    def ttl(self) -> float:
        if self.summary_ttl is not None:
            return self.summary_ttl
        return DEFAULT_SUMMARY_TTL_PERIODS * self.decision_period


class Gateway:
    """One Enhanced Gateway and all of its mutable state."""

    def __init__(
        self,
        eg_id: str,
        network_id: str,
        sensor_type: str,
        settings: GatewaySettings,
        relevance: Mapping[str, float] | None = None,
        static: bool = False,
    ) -> None:
        if sensor_type not in settings.thresholds:
            raise ConfigurationError(f"gateway {eg_id} has no threshold for {sensor_type}",
                                     field="thresholds")
        self.eg_id = eg_id
        self.network_id = network_id
        self.sensor_type = sensor_type
        self.settings = settings
        self.relevance = dict(relevance or {})
        self.static = static
        self.monitor = MonitorHistory(window=settings.rules.window)
        self.store = HistoryStore(settings.history_capacity)
        self.trust: dict[str, TrustRecord] = {
            peer: TrustRecord(peer, settings.trust.tau0) for peer in sorted(self.relevance)
        }
        self.peer_summaries: dict[str, SummaryReport] = {}
        self.latest: dict[str, tuple[float, float]] = {}
        self.current: NetworkConfig | None = None
        self.last_q_req: float | None = None
        self.p = 0.0
        self._last_published: SummaryReport | None = None
        self._planned = False
        self.filter_stats = FilterStats()

    # ── helpers ──

    def _local_evidences(self, t: float) -> list[float]:
        th = self.settings.thresholds[self.sensor_type]
        interval = self.current.report_interval if self.current else 0.0
        horizon = interval + self.settings.decision_period
        return [evidence(v, th) for _node, (ts, v) in sorted(self.latest.items()) if t - ts <= horizon]

    def _fresh_peers(self, t: float) -> list[SummaryReport]:
        return [
            s for peer, s in sorted(self.peer_summaries.items())
            if peer in self.relevance and t - s.window_end <= self.settings.ttl
        ]

    def _faulty(self, summary: SummaryReport, t: float) -> SummaryReport:
        fault = self.settings.fault
        if fault is None or t < fault.onset:
            self._last_published = summary
            return summary
        if fault.kind is GatewayFaultKind.BIAS:
            return replace(
                summary,
                anomaly_z=summary.anomaly_z + fault.magnitude,
                mean=summary.mean + fault.magnitude * math.sqrt(summary.variance),
            )
        frozen = self._last_published or summary
        self._last_published = frozen
        return replace(frozen, window_start=summary.window_start, window_end=summary.window_end)

    def max_effort(self, live: int, alert_mode: bool = False) -> NetworkConfig:
        return NetworkConfig(live, self.settings.planner.interval_set[0], alert_mode)

    def replan(self, view: NetworkView, frozen: bool = False) -> PlanResult:
        """Plan for the current ``p`` ignoring hysteresis, after node loss.

        A frozen or static gateway keeps its interval and shrinks to the
        live ceiling instead of planning.
        """
        if self.static or frozen or self.current is None:
            base = self.current or self.max_effort(view.live)
            cfg = NetworkConfig(min(base.n_active, view.live), base.report_interval, base.alert_mode)
            return PlanResult(cfg, 0.0, energy_rate(cfg, view.live, view.em))
        result = plan(self.p, view.live, view.positions, view.radii, self.settings.planner,
                      view.em, view.link, self.settings.quality_model, view.world)
        self.last_q_req = quality_required(self.p, self.settings.planner)
        return result

    # ── the MAPE loop ──

    def mape_tick(
        self,
        reports: Sequence[Measurement],
        summaries: Sequence[SummaryReport],
        t: float,
        view: NetworkView,
        label: bool | None = None,
        frozen: bool = False,
    ) -> TickOutcome:
        """Run one decision period.

        ``label`` is the ground truth during warm-up, stored as history after
        the pattern query;
        ``frozen`` suppresses planning.
        """
        s = self.settings
        out = TickOutcome()

        # Monitor
        accepted, rejected = monitor_filter(reports, s.rules, self.monitor)
        batch = FilterStats()
        batch.record(len(accepted), rejected)
        self.filter_stats.record(len(accepted), rejected)
        out.accepted = len(accepted)
        out.rejected_syntactic = batch.rejected("Syntactic")
        out.rejected_semantic = batch.rejected("Semantic")
        for m in accepted:
            prev = self.latest.get(m.node_id)
            if prev is None or m.timestamp >= prev[0]:
                self.latest[m.node_id] = (m.timestamp, m.value)
        local_z = list(self.monitor.batch_z)
        z_local = float(np.mean(local_z)) if local_z else None

        # Analyze: trust
        for summary in summaries:
            if summary.eg_id not in self.relevance:
                continue
            self.peer_summaries[summary.eg_id] = summary
            if z_local is not None:
                rec = update_trust(self.trust[summary.eg_id], z_local, clip_z(summary.anomaly_z), s.trust)
                self.trust[summary.eg_id] = rec
                logger.debug("%s trust in %s -> %.4f (score %.3f)",
                             self.eg_id, summary.eg_id, rec.trust, rec.last_score)

        # Analyze: inference
        peers = self._fresh_peers(t)
        external = [(p.event_prob, self.trust[p.eg_id].trust, self.relevance[p.eg_id]) for p in peers]
        p_threshold = infer_threshold(self._local_evidences(t), external)
        p_pattern = None
        if local_z:
            fv = build_features(
                local_z,
                [(clip_z(p.anomaly_z), self.trust[p.eg_id].trust * self.relevance[p.eg_id]) for p in peers],
                t,
            )
            p_pattern = infer_pattern(fv, self.store, s.k)
            if label is not None:
                self.store.add(fv, label)
        out.p_pattern = p_pattern
        p = combine_inference(p_threshold, p_pattern, s.mode)
        if self.p < s.planner.p_alert <= p:
            out.alerts.append(t)
            logger.info("%s alert at t=%.0f (p=%.3f)", self.eg_id, t, p)
        self.p = p
        out.p = p

        # Plan & execute
        if not frozen and not self.static and view.live >= 1:
            q_req = quality_required(p, s.planner)
            result = plan(p, view.live, view.positions, view.radii, s.planner,
                          view.em, view.link, s.quality_model, view.world)
            out.degraded = result.degraded
            current = self.current
            suppress = (
                current is not None
                and self._planned
                and self.last_q_req is not None
                and abs(q_req - self.last_q_req) < s.hysteresis
                and result.config.alert_mode == current.alert_mode
                and current.n_active <= view.live
            )
            if not suppress:
                self._planned = True
                self.last_q_req = q_req
                if result.config != current:
                    out.config_change = result.config
                    self.current = result.config
                    logger.info("%s reconfigures at t=%.0f: n=%d interval=%.0f alert=%s%s",
                                self.eg_id, t, result.config.n_active,
                                result.config.report_interval, result.config.alert_mode,
                                " (degraded)" if result.degraded else "")

        # Publish
        summary = make_summary(accepted, self.eg_id, (t - s.decision_period, t),
                               z_local if z_local is not None else 0.0, p)
        if summary is not None:
            out.summary = self._faulty(summary, t)
        return out


__all__ = [
    "AppType", "FilterRules", "FilterStats", "Gateway", "GatewayFault", "GatewayFaultKind",
    "GatewaySettings", "HistoryStore", "InferenceMode", "MonitorHistory",
    "NetworkView", "PlanResult", "PlannerConfig", "RejectReason", "ThresholdRamp",
    "TickOutcome", "TrustParams", "TrustRecord", "ValueBounds", "anomaly_z",
    "build_features", "clip_z", "combine_inference", "evidence", "infer_pattern",
    "infer_threshold", "monitor_filter", "plan", "quality_required", "update_trust",
]
