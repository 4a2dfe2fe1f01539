"""Load and validate scenario files.

A scenario is one XML document (schema in ``scenarios/SCHEMA.md``)::

    <scenario seed="7" duration="10800" warm_up="1800">
      <world width="500" height="500"/>
      <coupling><pair a="Temperature" b="CO2" kappa="0.8"/></coupling>
      <environment> <field .../> <event ...>...</event> </environment>
      <network id="A" sensor_type="Temperature"> <node .../> <gateway .../> </network>
      <overlay latency="1" loss="0"/>
    </scenario>

Everything not given falls back to the defaults in ``egsim.config``. Every
validation error names the offending field and the file line it came from.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

from lxml import etree

from egsim.config import (
    BUILTIN_SENSOR_TYPES,
    DEFAULT_DECISION_PERIOD,
    DEFAULT_FILTER_BOUNDS,
    DEFAULT_THRESHOLDS,
    DEFAULT_TICK,
)
from egsim.domain import CouplingMatrix, Position, RelevanceParams
from egsim.environment import EventSpec, FieldSpec
from egsim.errors import ConfigurationError, ScenarioParseError
from egsim.gateway import (
    AppType,
    FilterRules,
    GatewayFault,
    GatewayFaultKind,
    GatewaySettings,
    InferenceMode,
    PlannerConfig,
    ThresholdRamp,
    TrustParams,
    ValueBounds,
)
from egsim.metrics import QualityModel, World
from egsim.overlay import OverlayLink
from egsim.wsn import EnergyModel, FaultKind, FaultSpec, LinkModel, NetworkConfig, NodeSpec

logger = logging.getLogger(__name__)


# ── Scenario types ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class GatewaySpec:
    eg_id: str
    settings: GatewaySettings
    initial: NetworkConfig | None = None


@dataclass(frozen=True)
class NetworkSpec:
    network_id: str
    sensor_type: str
    nodes: tuple[NodeSpec, ...]
    energy: EnergyModel
    link: LinkModel
    gateway: GatewaySpec

    @property
    def positions(self) -> list[Position]:
        return [n.position for n in self.nodes]


@dataclass(frozen=True)
class Scenario:
    world: World
    duration: float
    seed: int
    networks: tuple[NetworkSpec, ...]
    coupling: CouplingMatrix
    fields: tuple[FieldSpec, ...] = ()
    events: tuple[EventSpec, ...] = ()
    tick: float = DEFAULT_TICK
    warm_up: float = 0.0
    collaboration: bool = True
    relevance: RelevanceParams = RelevanceParams()
    overlay: dict[tuple[str, str], OverlayLink] | None = None
    source: str | None = None

    def network(self, network_id: str) -> NetworkSpec:
        for net in self.networks:
            if net.network_id == network_id:
                return net
        raise KeyError(network_id)

    def gateway_of(self, network_id: str) -> str:
        return self.network(network_id).gateway.eg_id

    @property
    def overlay_links(self) -> dict[tuple[str, str], OverlayLink]:
        """Directed gateway links in use; empty when collaboration is off."""
        if not self.collaboration or self.overlay is None:
            return {}
        return self.overlay

    def with_seed(self, seed: int) -> Scenario:
        return replace(self, seed=int(seed))

    def with_collaboration(self, enabled: bool) -> Scenario:
        return replace(self, collaboration=enabled)


# ── Attribute helpers ─────────────────────────────────────────────────────


class _Ctx:
    """Carries the file name so every error can point at ``file:line``."""

    def __init__(self, source: str) -> None:
        self.source = source

    def where(self, el: etree._Element) -> str:
        return f"{self.source}:{el.sourceline}"

    def error(self, el: etree._Element, message: str, field: str) -> ConfigurationError:
        return ConfigurationError(message, field=field, location=self.where(el))

    def text(self, el: etree._Element, name: str, default: str | None = None) -> str:
        val = el.get(name)
        if val is None or not val.strip():
            if default is None:
                raise self.error(el, f"<{el.tag}> is missing required attribute '{name}'", name)
            return default
        return val.strip()

    def num(self, el: etree._Element, name: str, default: float | None = None) -> float:
        val = el.get(name)
        if val is None or not val.strip():
            if default is None:
                raise self.error(el, f"<{el.tag}> is missing required attribute '{name}'", name)
            return float(default)
        try:
            out = float(val)
        except ValueError:
            raise self.error(el, f"'{name}' must be a number, got {val!r}", name) from None
        if not math.isfinite(out):
            raise self.error(el, f"'{name}' must be finite, got {val!r}", name)
        return out

    def integer(self, el: etree._Element, name: str, default: int | None = None) -> int:
        out = self.num(el, name, None if default is None else float(default))
        if out != int(out):
            raise self.error(el, f"'{name}' must be an integer, got {el.get(name)!r}", name)
        return int(out)

    def flag(self, el: etree._Element, name: str, default: bool) -> bool:
        val = el.get(name)
        if val is None:
            return default
        val = val.strip().lower()
        if val in ("1", "true", "yes", "on"):
            return True
        if val in ("0", "false", "no", "off"):
            return False
        raise self.error(el, f"'{name}' must be true or false, got {val!r}", name)

    def build(self, el: etree._Element, factory, *args, **kwargs):
        """Construct a validated value, tagging its errors with ``el``'s line."""
        try:
            return factory(*args, **kwargs)
        except ConfigurationError as exc:
            raise ConfigurationError(
                exc.message, field=exc.field, location=self.where(el)
            ) from exc


def _enum(ctx: _Ctx, el: etree._Element, name: str, enum_cls, default=None):
    raw = el.get(name)
    if raw is None:
        if default is None:
            raise ctx.error(el, f"<{el.tag}> is missing required attribute '{name}'", name)
        return default
    for member in enum_cls:
        if member.value.lower() == raw.strip().lower():
            return member
    choices = ", ".join(m.value for m in enum_cls)
    raise ctx.error(el, f"'{name}' must be one of {choices}, got {raw!r}", name)


def _intervals(ctx: _Ctx, el: etree._Element, tick: float) -> tuple[float, ...]:
    raw = el.get("intervals")
    if raw is None:
        return PlannerConfig().interval_set
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ctx.error(el, "interval_set must not be empty", "interval_set")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise ctx.error(el, f"interval_set must be numbers, got {raw!r}", "interval_set") from None
    for v in values:
        ratio = v / tick
        if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
            raise ctx.error(el, f"interval {v} is not a multiple of tick {tick}", "interval_set")
    return values


# ── Section parsers ───────────────────────────────────────────────────────


def _parse_environment(ctx: _Ctx, env_el: etree._Element | None) -> tuple[list[FieldSpec], list[EventSpec]]:
    if env_el is None:
        return [], []
    fields: list[FieldSpec] = []
    for f in env_el.findall("field"):
        fields.append(ctx.build(
            f, FieldSpec,
            sensor_type=ctx.text(f, "sensor_type"),
            baseline=ctx.num(f, "baseline"),
            diurnal_amplitude=ctx.num(f, "diurnal_amplitude", 0.0),
            noise_sigma=ctx.num(f, "noise_sigma", 0.0),
            noise_corr_len=ctx.num(f, "noise_corr_len", 50.0),
        ))
    seen = set()
    for f, spec in zip(env_el.findall("field"), fields):
        if spec.sensor_type in seen:
            raise ctx.error(f, f"duplicate field for {spec.sensor_type}", "field.sensor_type")
        seen.add(spec.sensor_type)

    events: list[EventSpec] = []
    for i, ev in enumerate(env_el.findall("event")):
        intensity = {
            ctx.text(it, "sensor_type"): ctx.num(it, "delta")
            for it in ev.findall("intensity")
        }
        events.append(ctx.build(
            ev, EventSpec,
            event_id=ctx.text(ev, "id", f"event-{i + 1}"),
            start=ctx.num(ev, "start"),
            duration=ctx.num(ev, "duration"),
            center=Position(ctx.num(ev, "x"), ctx.num(ev, "y")),
            radius=ctx.num(ev, "radius"),
            intensity=intensity,
        ))
    ids = [e.event_id for e in events]
    if len(set(ids)) != len(ids):
        raise ctx.error(env_el, "event ids must be unique", "event.id")
    return fields, events


def _parse_fault(ctx: _Ctx, el: etree._Element | None) -> FaultSpec | None:
    if el is None:
        return None
    return ctx.build(
        el, FaultSpec,
        kind=_enum(ctx, el, "kind", FaultKind),
        magnitude=ctx.num(el, "magnitude", 0.0),
        onset=ctx.num(el, "onset", 0.0),
        rate=ctx.num(el, "rate", 0.0),
    )


def _parse_filter(ctx: _Ctx, el: etree._Element | None) -> FilterRules:
    bounds = {t: ValueBounds(*b) for t, b in DEFAULT_FILTER_BOUNDS.items()}
    if el is None:
        return FilterRules(bounds=bounds)
    for b in el.findall("bounds"):
        bounds[ctx.text(b, "sensor_type")] = ctx.build(
            b, ValueBounds, ctx.num(b, "min"), ctx.num(b, "max"), ctx.num(b, "max_rate")
        )
    defaults = FilterRules(bounds=bounds)
    return ctx.build(
        el, FilterRules,
        bounds=bounds,
        z_max=ctx.num(el, "z_max", defaults.z_max),
        window=ctx.integer(el, "window", defaults.window),
        max_age=ctx.num(el, "max_age", defaults.max_age),
        min_corroboration=ctx.integer(el, "min_corroboration", defaults.min_corroboration),
        corroboration_horizon=ctx.num(el, "corroboration_horizon", defaults.corroboration_horizon),
    )


def _parse_gateway(
    ctx: _Ctx,
    el: etree._Element,
    network_id: str,
    sensor_type: str,
    node_count: int,
    tick: float,
) -> GatewaySpec:
    eg_id = ctx.text(el, "id", f"EG-{network_id}")

    thresholds = {t: ThresholdRamp(*th) for t, th in DEFAULT_THRESHOLDS.items()}
    th_el = el.find("thresholds")
    if th_el is not None:
        for th in th_el.findall("threshold"):
            thresholds[ctx.text(th, "sensor_type")] = ctx.build(
                th, ThresholdRamp, ctx.num(th, "low"), ctx.num(th, "high")
            )
    if sensor_type not in thresholds:
        raise ctx.error(el, f"no thresholds for sensor type {sensor_type}", "thresholds")

    rules = _parse_filter(ctx, el.find("filter"))
    if sensor_type not in rules.bounds:
        raise ctx.error(el, f"no filter bounds for sensor type {sensor_type}", "filter.bounds")

    trust_el = el.find("trust")
    trust = TrustParams()
    if trust_el is not None:
        trust = ctx.build(
            trust_el, TrustParams,
            alpha=ctx.num(trust_el, "alpha", trust.alpha),
            delta_max=ctx.num(trust_el, "delta_max", trust.delta_max),
            tau0=ctx.num(trust_el, "tau0", trust.tau0),
        )

    app_type = _enum(ctx, el, "app_type", AppType, AppType.MONITORING)
    pl_el = el.find("planner")
    planner = PlannerConfig(app_type=app_type, alert_min_nodes=math.ceil(node_count / 2))
    if pl_el is not None:
        planner = ctx.build(
            pl_el, PlannerConfig,
            interval_set=_intervals(ctx, pl_el, tick),
            q_min=ctx.num(pl_el, "q_min", planner.q_min),
            q_max=ctx.num(pl_el, "q_max", planner.q_max),
            app_type=app_type,
            p_alert=ctx.num(pl_el, "p_alert", planner.p_alert),
            alert_max_interval=ctx.num(pl_el, "alert_max_interval", planner.alert_max_interval),
            alert_min_nodes=ctx.integer(pl_el, "alert_min_nodes", planner.alert_min_nodes),
        )
    else:
        for v in planner.interval_set:
            if abs(v / tick - round(v / tick)) > 1e-9:
                raise ctx.error(el, f"interval {v} is not a multiple of tick {tick}", "interval_set")
    if planner.alert_min_nodes > node_count:
        raise ctx.error(
            pl_el if pl_el is not None else el,
            f"alert_min_nodes {planner.alert_min_nodes} exceeds node count {node_count}",
            "alert_min_nodes",
        )

    q_el = el.find("quality")
    quality = QualityModel(ref_interval=planner.interval_set[0])
    if q_el is not None:
        quality = ctx.build(
            q_el, QualityModel,
            ref_interval=ctx.num(q_el, "ref_interval", quality.ref_interval),
            grid_resolution=ctx.num(q_el, "grid_resolution", quality.grid_resolution),
            w_c=ctx.num(q_el, "w_c", 1.0),
            w_f=ctx.num(q_el, "w_f", 1.0),
            w_d=ctx.num(q_el, "w_d", 1.0),
        )

    hist_el = el.find("history")
    defaults = GatewaySettings(rules=rules, thresholds=thresholds)
    capacity = defaults.history_capacity
    k = defaults.k
    if hist_el is not None:
        capacity = ctx.integer(hist_el, "capacity", capacity)
        k = ctx.integer(hist_el, "k", k)
        if capacity < 1:
            raise ctx.error(hist_el, f"history capacity must be >= 1, got {capacity}", "history.capacity")
        if k < 1:
            raise ctx.error(hist_el, f"history k must be >= 1, got {k}", "history.k")

    decision_period = ctx.num(el, "decision_period", DEFAULT_DECISION_PERIOD)
    ratio = decision_period / tick
    if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
        raise ctx.error(el, f"decision_period {decision_period} is not a multiple of tick {tick}",
                        "decision_period")

    fault = None
    fault_el = el.find("fault")
    if fault_el is not None:
        fault = GatewayFault(
            kind=_enum(ctx, fault_el, "kind", GatewayFaultKind),
            magnitude=ctx.num(fault_el, "magnitude", 0.0),
            onset=ctx.num(fault_el, "onset", 0.0),
        )

    ttl = el.get("summary_ttl")
    settings = ctx.build(
        el, GatewaySettings,
        rules=rules,
        thresholds=thresholds,
        trust=trust,
        planner=planner,
        quality=quality,
        mode=_enum(ctx, el, "inference", InferenceMode, InferenceMode.MAX),
        decision_period=decision_period,
        history_capacity=capacity,
        k=k,
        hysteresis=ctx.num(el, "hysteresis", defaults.hysteresis),
        summary_ttl=None if ttl is None else ctx.num(el, "summary_ttl"),
        fault=fault,
    )

    initial = None
    init_el = el.find("initial")
    if init_el is not None:
        initial = NetworkConfig(
            n_active=ctx.integer(init_el, "n_active", node_count),
            report_interval=ctx.num(init_el, "report_interval", planner.interval_set[0]),
            alert_mode=ctx.flag(init_el, "alert_mode", False),
        )
        if not 1 <= initial.n_active <= node_count:
            raise ctx.error(init_el, f"n_active must be in [1, {node_count}]", "initial.n_active")
        if initial.report_interval not in planner.interval_set:
            raise ctx.error(init_el, "report_interval must be one of the planner intervals",
                            "initial.report_interval")
    return GatewaySpec(eg_id=eg_id, settings=settings, initial=initial)


def _parse_network(ctx: _Ctx, el: etree._Element, world: World, tick: float) -> NetworkSpec:
    network_id = ctx.text(el, "id")
    sensor_type = ctx.text(el, "sensor_type")
    # Network-level attributes are defaults for its nodes.
    radius = ctx.num(el, "sensing_radius") if el.get("sensing_radius") else None
    battery = ctx.num(el, "battery") if el.get("battery") else None
    sigma = ctx.num(el, "sensor_sigma", 0.0)

    nodes: list[NodeSpec] = []
    for n in el.findall("node"):
        pos = Position(ctx.num(n, "x"), ctx.num(n, "y"))
        if not world.contains(pos):
            raise ctx.error(n, f"node position ({pos.x}, {pos.y}) is outside the world", "node.position")
        nodes.append(ctx.build(
            n, NodeSpec,
            node_id=ctx.text(n, "id"),
            position=pos,
            sensor_type=sensor_type,
            sensing_radius=ctx.num(n, "sensing_radius", radius),
            battery=ctx.num(n, "battery", battery),
            fault=_parse_fault(ctx, n.find("fault")),
            sensor_sigma=ctx.num(n, "sensor_sigma", sigma),
        ))
    if not nodes:
        raise ctx.error(el, f"network {network_id} has no nodes", "node")

    energy_el = el.find("energy")
    energy = EnergyModel()
    if energy_el is not None:
        energy = ctx.build(
            energy_el, EnergyModel,
            p_idle=ctx.num(energy_el, "p_idle", energy.p_idle),
            p_sleep=ctx.num(energy_el, "p_sleep", energy.p_sleep),
            e_sample=ctx.num(energy_el, "e_sample", energy.e_sample),
            e_tx=ctx.num(energy_el, "e_tx", energy.e_tx),
        )
    link_el = el.find("link")
    link = LinkModel()
    if link_el is not None:
        link = ctx.build(link_el, LinkModel,
                         pdr=ctx.num(link_el, "pdr", 1.0), latency=ctx.num(link_el, "latency", 0.0))

    gateways = el.findall("gateway")
    if len(gateways) != 1:
        raise ctx.error(el, f"network {network_id} must have exactly one gateway, found {len(gateways)}",
                        "gateway")
    gateway = _parse_gateway(ctx, gateways[0], network_id, sensor_type, len(nodes), tick)
    return NetworkSpec(network_id, sensor_type, tuple(nodes), energy, link, gateway)


def _parse_overlay(
    ctx: _Ctx,
    el: etree._Element | None,
    eg_ids: list[str],
) -> dict[tuple[str, str], OverlayLink]:
    default = OverlayLink()
    if el is not None:
        default = ctx.build(el, OverlayLink,
                            latency=ctx.num(el, "latency", 0.0), loss=ctx.num(el, "loss", 0.0))
    link_els = [] if el is None else el.findall("link")
    if not link_els:
        return {(a, b): default for a in eg_ids for b in eg_ids if a != b}

    links: dict[tuple[str, str], OverlayLink] = {}
    for ln in link_els:
        src, dst = ctx.text(ln, "from"), ctx.text(ln, "to")
        for eg in (src, dst):
            if eg not in eg_ids:
                raise ctx.error(ln, f"overlay link references unknown gateway {eg}", "overlay.link")
        if src == dst:
            raise ctx.error(ln, "overlay link must join two different gateways", "overlay.link")
        link = ctx.build(ln, OverlayLink,
                         latency=ctx.num(ln, "latency", default.latency),
                         loss=ctx.num(ln, "loss", default.loss))
        links[(src, dst)] = link
        if not ctx.flag(ln, "directed", False):
            links[(dst, src)] = link
    return links


# ── Entry points ──────────────────────────────────────────────────────────


def parse_scenario(root: etree._Element, source: str = "<scenario>") -> Scenario:
    """Build a validated ``Scenario`` from a parsed ``<scenario>`` element."""
    ctx = _Ctx(source)
    if root.tag != "scenario":
        raise ctx.error(root, f"root element must be <scenario>, got <{root.tag}>", "scenario")

    tick = ctx.num(root, "tick", DEFAULT_TICK)
    if not tick > 0:
        raise ctx.error(root, "tick must be > 0", "tick")
    duration = ctx.num(root, "duration")
    warm_up = ctx.num(root, "warm_up", 0.0)
    if duration < 0 or warm_up < 0:
        raise ctx.error(root, "duration and warm_up must be >= 0", "duration")
    if duration > 0 and warm_up >= duration:
        raise ctx.error(root, f"warm_up {warm_up} must be shorter than duration {duration}", "warm_up")
    if duration == 0 and warm_up > 0:
        raise ctx.error(root, "warm_up must be 0 for a zero-length run", "warm_up")
    seed = ctx.integer(root, "seed", 0)

    world_el = root.find("world")
    if world_el is None:
        raise ctx.error(root, "missing <world>", "world")
    world = ctx.build(world_el, World, ctx.num(world_el, "width"), ctx.num(world_el, "height"))

    rel_el = root.find("relevance")
    relevance = RelevanceParams()
    if rel_el is not None:
        relevance = ctx.build(rel_el, RelevanceParams, d0=ctx.num(rel_el, "d0", relevance.d0))

    declared = set(BUILTIN_SENSOR_TYPES)
    declared.update(ctx.text(st, "name") for st in root.findall("sensor_type"))

    pairs = []
    coupling_el = root.find("coupling")
    if coupling_el is not None:
        for pair in coupling_el.findall("pair"):
            a, b = ctx.text(pair, "a"), ctx.text(pair, "b")
            for t in (a, b):
                if t not in declared:
                    raise ctx.error(pair, f"unknown sensor type {t}", "coupling")
            pairs.append((a, b, ctx.num(pair, "kappa")))
    coupling = ctx.build(coupling_el if coupling_el is not None else root,
                         CouplingMatrix.from_pairs, declared, pairs)

    fields, events = _parse_environment(ctx, root.find("environment"))
    for f, spec in zip(root.findall("environment/field"), fields):
        if spec.sensor_type not in declared:
            raise ctx.error(f, f"unknown sensor type {spec.sensor_type}", "field.sensor_type")
    field_types = {f.sensor_type for f in fields}

    net_els = root.findall("network")
    if not net_els:
        raise ctx.error(root, "scenario has no <network>", "network")
    networks: list[NetworkSpec] = []
    for net_el in net_els:
        net = _parse_network(ctx, net_el, world, tick)
        if net.sensor_type not in declared:
            raise ctx.error(net_el, f"unknown sensor type {net.sensor_type}", "sensor_type")
        if net.sensor_type not in field_types:
            raise ctx.error(net_el, f"no <field> for sensor type {net.sensor_type}", "environment.field")
        networks.append(net)

    for what, ids in (
        ("network", [n.network_id for n in networks]),
        ("gateway", [n.gateway.eg_id for n in networks]),
        ("node", [nd.node_id for n in networks for nd in n.nodes]),
    ):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ctx.error(root, f"duplicate {what} ids: {', '.join(dupes)}", f"{what}.id")

    eg_ids = [n.gateway.eg_id for n in networks]
    overlay = _parse_overlay(ctx, root.find("overlay"), eg_ids)
    type_of = {n.gateway.eg_id: n.sensor_type for n in networks}
    for src, dst in sorted(overlay):
        a, b = type_of[src], type_of[dst]
        if not coupling.has_pair(a, b):
            raise ConfigurationError(
                f"coupling matrix has no entry for pair ({a}, {b}) used by {src} -> {dst}",
                field=f"coupling[{a},{b}]",
                location=ctx.where(coupling_el if coupling_el is not None else root),
            )

    scenario = Scenario(
        world=world,
        duration=duration,
        seed=seed,
        networks=tuple(networks),
        coupling=coupling,
        fields=tuple(fields),
        events=tuple(events),
        tick=tick,
        warm_up=warm_up,
        collaboration=ctx.flag(root, "collaboration", True),
        relevance=relevance,
        overlay=overlay,
        source=source,
    )
    logger.info(
        "Loaded scenario %s: %d networks, %d events, %.0f s (warm-up %.0f s)",
        source, len(networks), len(events), duration, warm_up,
    )
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate the scenario file at ``path``.

    Raises ``ScenarioParseError`` for malformed XML, ``ConfigurationError``
    for invalid content, and ``OSError`` when the file cannot be read.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"scenario file not found: {path}")
    try:
        tree = etree.parse(str(path))
    except etree.XMLSyntaxError as exc:
        raise ScenarioParseError(f"malformed XML: {exc.msg}", field="scenario",
                                 location=f"{path}:{exc.lineno}") from exc
    return parse_scenario(tree.getroot(), str(path))
