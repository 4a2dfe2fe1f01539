"""One sensor network: sampling, faults, delivery to the sink, energy.

Each network is a single-hop star: nodes report straight to the sink with
a scalar delivery ratio and latency. Active nodes sample exactly once per
report interval, at a per-node phase offset so reports do not arrive in
bursts.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np

from egsim.domain import Measurement, Position, SensorType
from egsim.environment import Environment
from egsim.errors import ConfigurationError, InsufficientLiveNodesError
from egsim.randomness import stable_hash

logger = logging.getLogger(__name__)


# ── Specs ─────────────────────────────────────────────────────────────────


class FaultKind(str, Enum):
    BIAS = "bias"
    STUCK = "stuck"
    SPIKE = "spike"


@dataclass(frozen=True)
class FaultSpec:
    kind: FaultKind
    magnitude: float = 0.0
    onset: float = 0.0
    rate: float = 0.0  # per-sample probability, spikes only

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigurationError(f"fault rate must be in [0, 1], got {self.rate}", field="rate")


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    position: Position
    sensor_type: SensorType
    sensing_radius: float
    battery: float
    fault: FaultSpec | None = None
    sensor_sigma: float = 0.0

    def __post_init__(self) -> None:
        if not self.battery > 0:
            raise ConfigurationError(f"node {self.node_id}: battery must be > 0", field="battery")
        if not self.sensing_radius > 0:
            raise ConfigurationError(
                f"node {self.node_id}: sensing_radius must be > 0", field="sensing_radius"
            )
        if self.sensor_sigma < 0:
            raise ConfigurationError(f"node {self.node_id}: sensor_sigma must be >= 0", field="sensor_sigma")


@dataclass(frozen=True)
class EnergyModel:
    p_idle: float = 0.01
    p_sleep: float = 0.001
    e_sample: float = 0.05
    e_tx: float = 0.25

    def __post_init__(self) -> None:
        if min(self.p_idle, self.p_sleep, self.e_sample, self.e_tx) < 0:
            raise ConfigurationError("energy model values must be >= 0", field="energy")
        if self.p_idle < self.p_sleep:
            raise ConfigurationError("p_idle must be >= p_sleep", field="energy.p_idle")


@dataclass(frozen=True)
class LinkModel:
    pdr: float = 1.0
    latency: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.pdr <= 1.0:
            raise ConfigurationError(f"pdr must be in [0, 1], got {self.pdr}", field="link.pdr")
        if self.latency < 0:
            raise ConfigurationError("link latency must be >= 0", field="link.latency")


@dataclass(frozen=True)
class NetworkConfig:
    n_active: int
    report_interval: float
    alert_mode: bool = False

    @property
    def report_rate(self) -> float:
        """Reports per second arriving at the sink, the throughput proxy."""
        return self.n_active / self.report_interval


# ── Node state ────────────────────────────────────────────────────────────


@dataclass
class NodeState:
    spec: NodeSpec
    battery: float
    consumed: float = 0.0
    alive: bool = True
    last_value: float | None = None

    @classmethod
    def from_spec(cls, spec: NodeSpec) -> NodeState:
        return cls(spec=spec, battery=spec.battery)

    @property
    def node_id(self) -> str:
        return self.spec.node_id

    @property
    def position(self) -> Position:
        return self.spec.position

    def debit(self, joules: float) -> float:
        """Take up to ``joules`` from the battery; returns what was taken."""
        taken = min(self.battery, joules)
        self.battery -= taken
        self.consumed += taken
        return taken


class _HasBattery(Protocol):
    node_id: str
    battery: float


# ── Operations ────────────────────────────────────────────────────────────


def select_active(nodes: Sequence[_HasBattery], n: int, t: float) -> list[str]:
    """Pick ``n`` nodes: highest battery first, lowest id on ties.

    Re-evaluated at every reconfiguration, so the drain rotates across
    the network.
    """
    live = [nd for nd in nodes if nd.battery > 0 and getattr(nd, "alive", True)]
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > len(live):
        raise InsufficientLiveNodesError(n, len(live))
    ranked = sorted(live, key=lambda nd: (-nd.battery, nd.node_id))
    return [nd.node_id for nd in ranked[:n]]


def _fault_value(node: NodeState, value: float, t: float, rng: np.random.Generator) -> float:
    fault = node.spec.fault
    if fault is None:
        node.last_value = value
        return value
    if fault.kind is FaultKind.SPIKE:
        # Draw every sample so the stream does not depend on onset.
        spiked = rng.random() < fault.rate
        return value + fault.magnitude if spiked and t >= fault.onset else value
    if t < fault.onset:
        node.last_value = value
        return value
    if fault.kind is FaultKind.BIAS:
        return value + fault.magnitude
    # Stuck: repeat the last pre-onset reading (freeze the first one if none).
    if node.last_value is None:
        node.last_value = value
    return node.last_value


def sample(
    node: NodeState,
    env: Environment,
    t: float,
    rng: np.random.Generator,
    em: EnergyModel,
) -> Measurement | None:
    """Take one reading and debit ``e_sample``; ``None`` when the node is dead."""
    if not node.alive or node.battery < em.e_sample or node.battery <= 0:
        if node.alive:
            logger.debug("Node %s died at t=%.0f (battery %.6f J)", node.node_id, t, node.battery)
        node.alive = False
        return None
    value = env.value(node.spec.sensor_type, node.position, t)
    if node.spec.sensor_sigma > 0:
        value += rng.normal(0.0, node.spec.sensor_sigma)
    value = _fault_value(node, value, t, rng)
    node.debit(em.e_sample)
    return Measurement(
        node_id=node.node_id,
        sensor_type=node.spec.sensor_type,
        value=float(value),
        timestamp=t,
        position=node.position,
    )


@dataclass(frozen=True)
class Delivery:
    delivered: bool
    arrival_time: float | None = None


def deliver_report(link: LinkModel, rng: np.random.Generator, send_time: float = 0.0) -> Delivery:
    """Bernoulli(pdr) delivery; arrival ``latency`` seconds after sending."""
    if rng.random() < link.pdr:
        return Delivery(True, send_time + link.latency)
    return Delivery(False)


def energy_rate(cfg: NetworkConfig, total_nodes: int, em: EnergyModel) -> float:
    """Closed-form long-run network power draw in watts."""
    active = cfg.n_active * (em.p_idle + (em.e_sample + em.e_tx) / cfg.report_interval)
    return active + (total_nodes - cfg.n_active) * em.p_sleep


# ── Network ───────────────────────────────────────────────────────────────


@dataclass
class StepResult:
    reports: list[Measurement]
    energy_delta: float
    attempts: int = 0
    lost: int = 0
    deaths: list[str] = field(default_factory=list)


class NetworkState:
    """Mutable state of one network, owned by the simulation loop."""

    def __init__(
        self,
        network_id: str,
        nodes: Sequence[NodeSpec],
        em: EnergyModel,
        link: LinkModel,
        tick: float = 1.0,
    ) -> None:
        if not nodes:
            raise ConfigurationError(f"network {network_id} has no nodes", field="node")
        self.network_id = network_id
        self.sensor_type = nodes[0].sensor_type
        self.nodes = [NodeState.from_spec(n) for n in sorted(nodes, key=lambda n: n.node_id)]
        self.em = em
        self.link = link
        self.tick = tick
        self.config: NetworkConfig | None = None
        self.active_ids: set[str] = set()
        self._in_flight: list[tuple[int, int, Measurement]] = []
        self._seq = 0

    @property
    def total_nodes(self) -> int:
        return len(self.nodes)

    @property
    def live_nodes(self) -> list[NodeState]:
        return [n for n in self.nodes if n.alive and n.battery > 0]

    @property
    def live_count(self) -> int:
        return len(self.live_nodes)

    @property
    def consumed(self) -> float:
        return sum(n.consumed for n in self.nodes)

    def node(self, node_id: str) -> NodeState:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def ranked_live_positions(self) -> list[tuple[Position, float]]:
        """(position, sensing radius) of live nodes in ``select_active`` order."""
        ranked = sorted(self.live_nodes, key=lambda nd: (-nd.battery, nd.node_id))
        return [(nd.position, nd.spec.sensing_radius) for nd in ranked]

    def apply_config(self, cfg: NetworkConfig, t: float) -> None:
        """Install ``cfg`` and re-select the active set.

        Raises ``InsufficientLiveNodesError`` when fewer nodes are alive than
        ``cfg.n_active``; the caller re-plans with the reduced ceiling.
        """
        interval_ticks = cfg.report_interval / self.tick
        if interval_ticks < 1 or abs(interval_ticks - round(interval_ticks)) > 1e-9:
            raise ConfigurationError(
                f"report interval {cfg.report_interval} is not a multiple of tick {self.tick}",
                field="interval_set",
            )
        self.active_ids = set(select_active(self.nodes, cfg.n_active, t))
        self.config = cfg

    def phase(self, node_id: str, interval_ticks: int) -> int:
        return stable_hash(node_id) % interval_ticks


def step_network(
    state: NetworkState,
    cfg: NetworkConfig,
    env: Environment,
    t: float,
    rng: np.random.Generator,
) -> StepResult:
    """Advance one tick: due reports, idle/sleep draw, and sink arrivals.

    A node that drains its battery to zero finishes the tick and is reported
    dead on the next one. A node that cannot afford a sample or transmission
    dies immediately.
    """
    tick_index = int(round(t / state.tick))
    interval_ticks = int(round(cfg.report_interval / state.tick))
    em = state.em
    delta = 0.0
    attempts = 0
    lost = 0
    deaths: list[str] = []

    for node in state.nodes:
        if not node.alive:
            continue
        if node.battery <= 0:
            # drained on an earlier tick
            node.alive = False
            deaths.append(node.node_id)
            logger.debug("Network %s: node %s dead at t=%.0f", state.network_id, node.node_id, t)
            continue
        active = node.node_id in state.active_ids
        if active and (tick_index - state.phase(node.node_id, interval_ticks)) % interval_ticks == 0:
            before = node.consumed
            m = sample(node, env, t, rng, em)
            if m is not None:
                if node.battery >= em.e_tx:
                    node.debit(em.e_tx)
                    attempts += 1
                    d = deliver_report(state.link, rng, t)
                    if d.delivered:
                        arrival = int(math.ceil(d.arrival_time / state.tick - 1e-9))
                        heapq.heappush(state._in_flight, (arrival, state._seq, m))
                        state._seq += 1
                    else:
                        lost += 1
                else:
                    node.alive = False
            delta += node.consumed - before
        if node.alive:
            delta += node.debit((em.p_idle if active else em.p_sleep) * state.tick)
        else:
            deaths.append(node.node_id)
            logger.debug("Network %s: node %s dead at t=%.0f", state.network_id, node.node_id, t)

    reports: list[Measurement] = []
    while state._in_flight and state._in_flight[0][0] <= tick_index:
        reports.append(heapq.heappop(state._in_flight)[2])
    return StepResult(reports=reports, energy_delta=delta, attempts=attempts, lost=lost, deaths=deaths)
