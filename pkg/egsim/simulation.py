"""The fixed-increment tick loop binding environment, networks, overlay and gateways.

Phase order inside every tick:

1. environment (stateless; queried at ``t`` by whoever needs it)
2. every network steps: due reports are sampled and sent, energy is drawn
3. the overlay hands each gateway the summaries due by ``t``
4. every gateway whose decision period elapsed runs one MAPE cycle

Randomness comes from named substreams of the master seed (see
``egsim.randomness``), so dropping a network leaves the others untouched.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from tqdm import tqdm

from egsim.config import SHOW_PROGRESS
from egsim.domain import Measurement, centroid_distance, relevance_weight, semantic_coupling
from egsim.environment import Environment, ground_truth
from egsim.errors import InsufficientLiveNodesError
from egsim.gateway import Gateway, NetworkView, TrustRecord
from egsim.metrics import RunMetrics, coverage, quality_from_coverage
from egsim.overlay import Overlay, SummaryReport
from egsim.randomness import substream
from egsim.scenario import NetworkSpec, Scenario
from egsim.wsn import NetworkConfig, NetworkState, step_network

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    metrics: RunMetrics
    configs: dict[str, NetworkConfig | None]
    trust: dict[str, dict[str, TrustRecord]]
    seed: int
    collaboration: bool = True
    static: bool = False
    elapsed: float = 0.0

    def total_energy(self, network_id: str) -> float:
        return self.metrics.total_energy(network_id)


def peer_relevance(scenario: Scenario) -> dict[str, dict[str, float]]:
    """Static ``rho`` of every peer, per receiving gateway."""
    nets = {n.gateway.eg_id: n for n in scenario.networks}
    out: dict[str, dict[str, float]] = {eg: {} for eg in nets}
    for src, dst in sorted(scenario.overlay_links):
        a, b = nets[dst], nets[src]
        kappa = semantic_coupling(a.sensor_type, b.sensor_type, scenario.coupling)
        distance = centroid_distance(a.positions, b.positions)
        out[dst][src] = relevance_weight(distance, kappa, scenario.relevance)
    return out


@dataclass
class _NetworkRuntime:
    spec: NetworkSpec
    state: NetworkState
    gateway: Gateway
    reports: list[Measurement] = field(default_factory=list)
    summaries: list[SummaryReport] = field(default_factory=list)
    q: float = 0.0
    last_energy: float = 0.0


class Simulation:
    """One run of a scenario under one seed."""

    def __init__(self, scenario: Scenario, seed: int | None = None, static: bool = False) -> None:
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else int(seed)
        self.static = static
        self.env = Environment(scenario.fields, scenario.events, self.seed)
        relevance = peer_relevance(scenario)

        self.runtimes: list[_NetworkRuntime] = []
        for spec in scenario.networks:
            state = NetworkState(spec.network_id, spec.nodes, spec.energy, spec.link, scenario.tick)
            gw = Gateway(
                spec.gateway.eg_id,
                spec.network_id,
                spec.sensor_type,
                spec.gateway.settings,
                relevance=relevance[spec.gateway.eg_id],
                static=static,
            )
            self.runtimes.append(_NetworkRuntime(spec, state, gw))

        self.overlay = Overlay(dict(scenario.overlay_links), scenario.tick)
        self.net_rngs = {rt.spec.network_id: substream(self.seed, f"network:{rt.spec.network_id}")
                         for rt in self.runtimes}
        self.link_rngs = {(s, d): substream(self.seed, f"overlay:{s}->{d}")
                          for s, d in sorted(scenario.overlay_links)}

        self.metrics = RunMetrics(
            network_ids=[rt.spec.network_id for rt in self.runtimes],
            eg_of={rt.spec.network_id: rt.gateway.eg_id for rt in self.runtimes},
            ground_truth=ground_truth(scenario.events, scenario.duration),
        )

        for rt in self.runtimes:
            initial = rt.spec.gateway.initial
            if static or initial is None:
                initial = rt.gateway.max_effort(rt.state.total_nodes)
            rt.gateway.current = initial
            self._install(rt, initial, 0.0)

    # ── configuration ──

    def _view(self, rt: _NetworkRuntime) -> NetworkView:
        ranked = rt.state.ranked_live_positions()
        return NetworkView(
            positions=[p for p, _r in ranked],
            radii=[r for _p, r in ranked],
            em=rt.spec.energy,
            link=rt.spec.link,
            world=self.scenario.world,
        )

    def _install(self, rt: _NetworkRuntime, cfg: NetworkConfig, t: float, frozen: bool = True) -> None:
        """Apply ``cfg``, re-planning with the live ceiling when nodes are short."""
        if rt.state.live_count == 0:
            rt.state.active_ids = set()
            rt.state.config = cfg
            rt.q = 0.0
            return
        try:
            rt.state.apply_config(cfg, t)
        except InsufficientLiveNodesError as exc:
            logger.info("%s: %d active nodes requested, %d alive; re-planning",
                        rt.spec.network_id, exc.requested, exc.live)
            cfg = rt.gateway.replan(self._view(rt), frozen=frozen).config
            rt.state.apply_config(cfg, t)
        rt.gateway.current = cfg
        active = [n for n in rt.state.nodes if n.node_id in rt.state.active_ids]
        c = coverage([n.position for n in active], [n.spec.sensing_radius for n in active],
                     self.scenario.world, rt.gateway.settings.quality_model.grid_resolution)
        rt.q = quality_from_coverage(c, cfg.report_interval, rt.spec.link.pdr,
                                     rt.gateway.settings.quality_model)

    # ── the loop ──

    def step(self, tick_index: int) -> None:
        sc = self.scenario
        t = tick_index * sc.tick
        warming = t < sc.warm_up

        for rt in self.runtimes:
            cfg = rt.state.config
            result = step_network(rt.state, cfg, self.env, t, self.net_rngs[rt.spec.network_id])
            rt.reports.extend(result.reports)
            if result.deaths:
                self.metrics.counts[rt.spec.network_id].dead_nodes += len(result.deaths)
                if rt.state.active_ids & set(result.deaths):
                    self._install(rt, rt.gateway.current or cfg, t, frozen=warming)

        for rt in self.runtimes:
            msgs = self.overlay.deliver(rt.gateway.eg_id, t)
            rt.summaries.extend(msgs)
            self.metrics.counts[rt.spec.network_id].summaries_delivered += len(msgs)

        for rt in self.runtimes:
            gw = rt.gateway
            dp_ticks = int(round(gw.settings.decision_period / sc.tick))
            if tick_index % dp_ticks:
                continue
            label = self.env.event_present(rt.spec.sensor_type, t) if warming else None
            out = gw.mape_tick(rt.reports, rt.summaries, t, self._view(rt), label=label, frozen=warming)
            rt.reports, rt.summaries = [], []

            counts = self.metrics.counts[rt.spec.network_id]
            counts.accepted += out.accepted
            counts.rejected_syntactic += out.rejected_syntactic
            counts.rejected_semantic += out.rejected_semantic
            counts.degraded_plans += int(out.degraded)
            for alert_t in out.alerts:
                self.metrics.alerts.append((gw.eg_id, alert_t))
            if out.config_change is not None:
                counts.config_changes += 1
                self._install(rt, out.config_change, t, frozen=False)
            if out.summary is not None and self.overlay.peers_of(gw.eg_id):
                peers = len(self.overlay.peers_of(gw.eg_id))
                dropped = self.overlay.send(out.summary, t, self.link_rngs)
                counts.summaries_sent += peers
                counts.summaries_dropped += dropped

        for rt in self.runtimes:
            cfg = rt.state.config
            self.metrics.record_tick(
                tick=tick_index,
                network_id=rt.spec.network_id,
                power_w=(rt.state.consumed - rt.last_energy) / sc.tick,
                energy_j=rt.state.consumed,
                q=rt.q,
                p=rt.gateway.p,
                n_active=len(rt.state.active_ids),
                report_interval=cfg.report_interval,
                alert=rt.gateway.p >= rt.gateway.settings.planner.p_alert,
            )
            rt.last_energy = rt.state.consumed

    def run(self, progress: bool | None = None) -> RunResult:
        sc = self.scenario
        n_ticks = int(round(sc.duration / sc.tick))
        show = SHOW_PROGRESS if progress is None else progress
        started = time.time()
        logger.info("Running %s (seed %d, %d ticks, collaboration %s%s)",
                    sc.source or "scenario", self.seed, n_ticks,
                    "on" if sc.collaboration else "off", ", static" if self.static else "")
        for tick_index in tqdm(range(n_ticks), desc="Ticks", unit="tick", disable=not show,
                               leave=False, mininterval=1.0):
            self.step(tick_index)
        elapsed = time.time() - started
        logger.info("Run finished in %.1fs", elapsed)
        return RunResult(
            metrics=self.metrics,
            configs={rt.spec.network_id: rt.state.config for rt in self.runtimes},
            trust={rt.gateway.eg_id: dict(rt.gateway.trust) for rt in self.runtimes},
            seed=self.seed,
            collaboration=sc.collaboration,
            static=self.static,
            elapsed=elapsed,
        )


def run(
    scenario: Scenario,
    seed: int | None = None,
    static: bool = False,
    progress: bool | None = None,
) -> RunResult:
    """Execute ``scenario`` deterministically under ``seed`` (default: the scenario's)."""
    return Simulation(scenario, seed=seed, static=static).run(progress=progress)
