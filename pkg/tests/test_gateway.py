"""Tests for the gateway's monitor, trust, inference and planning stages."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from egsim.config import DEFAULT_FILTER_BOUNDS, DEFAULT_THRESHOLDS
from egsim.domain import Measurement, Position
from egsim.errors import InsufficientHistoryError
from egsim.gateway import (
    AppType,
    FilterRules,
    Gateway,
    GatewaySettings,
    HistoryStore,
    InferenceMode,
    MonitorHistory,
    NetworkView,
    PlannerConfig,
    RejectReason,
    ThresholdRamp,
    TrustParams,
    TrustRecord,
    ValueBounds,
    anomaly_z,
    build_features,
    combine_inference,
    evidence,
    infer_pattern,
    infer_threshold,
    monitor_filter,
    plan,
    quality_required,
    update_trust,
)
from egsim.metrics import QualityModel, World, coverage, quality_from_coverage
from egsim.overlay import SummaryReport
from egsim.scenario import load_scenario
from egsim.wsn import EnergyModel, LinkModel, NetworkConfig, energy_rate

from tests.conftest import CANONICAL

_TOL = 1e-9
_unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False, allow_infinity=False)
_z = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False, allow_infinity=False)

_RULES = FilterRules({"Temperature": ValueBounds(-40.0, 120.0, 20.0)})


def _m(node: str, value: float, t: float, x: float = 0.0, y: float = 0.0) -> Measurement:
    return Measurement(node, "Temperature", value, t, Position(x, y))


def _settings(**planner) -> GatewaySettings:
    return GatewaySettings(
        rules=FilterRules({k: ValueBounds(*v) for k, v in DEFAULT_FILTER_BOUNDS.items()}),
        thresholds={k: ThresholdRamp(*v) for k, v in DEFAULT_THRESHOLDS.items()},
        planner=PlannerConfig(**planner),
    )


def _view(n: int = 4) -> NetworkView:
    positions = [Position(25.0 + 50.0 * (i % 2), 25.0 + 50.0 * (i // 2)) for i in range(n)]
    return NetworkView(positions, [40.0] * n, EnergyModel(), LinkModel(), World(100.0, 100.0))


def _fill(history: MonitorHistory, node: str, n: int = 20, start: float = 0.0) -> None:
    """Give ``node`` a window of ``n`` readings alternating 19.9 / 20.1."""
    batch = [_m(node, 20.0 + (0.1 if i % 2 else -0.1), start + 30.0 * i) for i in range(n)]
    accepted, _ = monitor_filter(batch, _RULES, history)
    assert len(accepted) == n


# ── Tests: monitor_filter ────────────────────────────────────────────────


class TestMonitorFilter:
    def setup_method(self) -> None:
        self.history = MonitorHistory()

    def test_non_finite(self) -> None:
        _, rejected = monitor_filter([_m("n1", float("nan"), 0.0)], _RULES, self.history)
        assert [(r.category, r) for _m_, r in rejected] == [("Syntactic", RejectReason.NON_FINITE)]

    def test_out_of_range(self) -> None:
        _, rejected = monitor_filter([_m("n1", 2000.0, 0.0)], _RULES, self.history)
        assert rejected[0][1] is RejectReason.OUT_OF_RANGE
        assert rejected[0][1].category == "Syntactic"

    def test_unknown_type(self) -> None:
        m = Measurement("n1", "Radiation", 1.0, 0.0, Position(0, 0))
        _, rejected = monitor_filter([m], _RULES, self.history)
        assert rejected[0][1] is RejectReason.UNKNOWN_TYPE

    def test_small_deviation_accepted(self) -> None:
        _fill(self.history, "n1")
        base = [v for _t, v in self.history.values["n1"]]
        z = anomaly_z(20.05, base)
        assert abs(z) < 4.0
        accepted, rejected = monitor_filter([_m("n1", 20.05, 600.0)], _RULES, self.history)
        assert len(accepted) == 1 and not rejected
        assert self.history.batch_z == [pytest.approx(z)]

    def test_rate_of_change(self) -> None:
        monitor_filter([_m("n1", 20.0, 0.0)], _RULES, self.history)
        _, rejected = monitor_filter([_m("n1", 100.0, 1.0)], _RULES, self.history)
        assert rejected[0][1] is RejectReason.RATE
        assert rejected[0][1].category == "Semantic"

    def test_lone_outlier_rejected(self) -> None:
        _fill(self.history, "n1")
        _, rejected = monitor_filter([_m("n1", 21.0, 600.0)], _RULES, self.history)
        assert rejected[0][1] is RejectReason.OUTLIER

    def test_corroborated_outlier_accepted(self) -> None:
        _fill(self.history, "n1")
        _fill(self.history, "n2")
        accepted, rejected = monitor_filter(
            [_m("n1", 21.0, 600.0), _m("n2", 21.0, 601.0)], _RULES, self.history
        )
        assert [m.node_id for m in accepted] == ["n2"]
        assert [m.node_id for m, _r in rejected] == ["n1"]

    def test_corroboration_disabled(self) -> None:
        rules = FilterRules(_RULES.bounds, min_corroboration=0)
        _fill(self.history, "n1")
        _fill(self.history, "n2")
        accepted, _ = monitor_filter([_m("n1", 21.0, 600.0), _m("n2", 21.0, 601.0)], rules, self.history)
        assert accepted == []

    def test_stale_window_cleared(self) -> None:
        _fill(self.history, "n1")
        accepted, _ = monitor_filter([_m("n1", 25.0, 570.0 + 901.0)], _RULES, self.history)
        assert len(accepted) == 1
        assert len(self.history.values["n1"]) == 1

    def test_min_corroboration_of_one_is_invalid(self) -> None:
        with pytest.raises(ValueError):
            FilterRules(_RULES.bounds, min_corroboration=1)

    @settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(values=st.lists(
        st.one_of(
            st.floats(min_value=-100.0, max_value=200.0, allow_nan=False),
            st.just(float("nan")),
            st.just(float("inf")),
        ),
        max_size=40,
    ))
    def test_partition(self, values: list[float]) -> None:
        batch = [_m(f"n{i % 3}", v, float(i)) for i, v in enumerate(values)]
        accepted, rejected = monitor_filter(batch, _RULES, MonitorHistory())
        seen = sorted([m.timestamp for m in accepted] + [m.timestamp for m, _r in rejected])
        assert seen == [float(i) for i in range(len(values))]

    def test_injected_out_of_range_all_caught(self) -> None:
        rng = np.random.default_rng(3)
        history = MonitorHistory()
        injected = caught = clean = falsely_rejected = 0
        for period in range(500):
            batch, bad = [], set()
            for i in range(10):
                node = f"n{i}"
                if rng.random() < 0.05:
                    batch.append(_m(node, 2000.0, 30.0 * period))
                    bad.add(node)
                else:
                    batch.append(_m(node, 20.0 + rng.normal(0.0, 0.5), 30.0 * period))
            _, rejected = monitor_filter(batch, _RULES, history)
            injected += len(bad)
            clean += len(batch) - len(bad)
            for m, reason in rejected:
                if m.node_id in bad:
                    caught += reason.category == "Syntactic"
                else:
                    falsely_rejected += 1
        assert injected > 0
        assert caught == injected
        assert falsely_rejected / clean <= 0.01


# ── Tests: anomaly_z ─────────────────────────────────────────────────────


class TestAnomalyZ:
    def test_at_mean(self) -> None:
        assert anomaly_z(20.0, [18, 19, 20, 21, 22]) == 0.0

    def test_constant_window(self) -> None:
        assert anomaly_z(21.0, [20.0] * 5) == pytest.approx(1e9)

    def test_hand_computed(self) -> None:
        assert anomaly_z(24.0, [18, 19, 20, 21, 22]) == pytest.approx(4.0 / math.sqrt(2.5), abs=1e-6)
        assert anomaly_z(24.0, [18, 19, 20, 21, 22]) == pytest.approx(2.53, abs=0.005)

    def test_short_window(self) -> None:
        with pytest.raises(InsufficientHistoryError):
            anomaly_z(1.0, [1.0, 2.0, 3.0])


# ── Tests: trust ─────────────────────────────────────────────────────────


class TestTrust:
    def setup_method(self) -> None:
        self.params = TrustParams()

    def test_fixed_point(self) -> None:
        rec = update_trust(TrustRecord("p", 0.5), 0.0, 2.0, self.params)
        assert rec.trust == pytest.approx(0.5)
        assert rec.last_score == pytest.approx(0.5)
        assert rec.updates == 1

    def test_score_floor(self) -> None:
        rec = update_trust(TrustRecord("p", 0.8), 0.0, 9.0, self.params)
        assert rec.last_score == 0.0
        assert rec.trust == pytest.approx(0.72)

    def test_disagreeing_peer_loses_trust(self) -> None:
        rec = TrustRecord("p", 0.5)
        for _ in range(10):
            rec = update_trust(rec, 0.0, 5.0, self.params)
        assert rec.trust < 0.2

    def test_agreeing_peer_gains_trust(self) -> None:
        rec = TrustRecord("p", 0.5)
        for _ in range(25):
            rec = update_trust(rec, 1.5, 1.5, self.params)
        assert rec.trust > 0.9

    def test_non_finite_rejected(self) -> None:
        with pytest.raises(ValueError):
            update_trust(TrustRecord("p", 0.5), float("nan"), 0.0, self.params)

    @settings(max_examples=1000, deadline=None)
    @given(tau0=_unit, stream=st.lists(st.tuples(_z, _z), max_size=50))
    def test_bounded(self, tau0: float, stream: list[tuple[float, float]]) -> None:
        rec = TrustRecord("p", tau0)
        for zl, ze in stream:
            rec = update_trust(rec, zl, ze, self.params)
            assert 0.0 <= rec.trust <= 1.0

    @settings(max_examples=1000, deadline=None)
    @given(tau0=_unit, stream=st.lists(_z, min_size=1, max_size=50))
    def test_agreement_never_lowers_trust(self, tau0: float, stream: list[float]) -> None:
        rec = TrustRecord("p", tau0)
        for z in stream:
            nxt = update_trust(rec, z, z, self.params)
            assert nxt.trust >= rec.trust - _TOL
            rec = nxt

    @settings(max_examples=1000, deadline=None)
    @given(tau0=_unit, n=st.integers(min_value=1, max_value=60))
    def test_disagreement_decays_geometrically(self, tau0: float, n: int) -> None:
        rec = TrustRecord("p", tau0)
        for _ in range(n):
            nxt = update_trust(rec, 0.0, self.params.delta_max, self.params)
            assert nxt.trust <= rec.trust + _TOL
            rec = nxt
        assert rec.trust == pytest.approx(tau0 * 0.9 ** n, abs=1e-9)


# ── Tests: threshold inference ───────────────────────────────────────────


class TestThresholdInference:
    def test_evidence_ramp(self) -> None:
        th = ThresholdRamp(40.0, 80.0)
        assert evidence(10.0, th) == 0.0
        assert evidence(40.0, th) == 0.0
        assert evidence(80.0, th) == 1.0
        assert evidence(95.0, th) == 1.0
        assert evidence(60.0, th) == pytest.approx(0.5)

    def test_bad_ramp(self) -> None:
        with pytest.raises(ValueError):
            ThresholdRamp(80.0, 40.0)

    def test_noisy_or_examples(self) -> None:
        assert infer_threshold([0.0, 0.0], [(0.0, 1.0, 1.0)]) == 0.0
        assert infer_threshold([0.7], []) == pytest.approx(0.7)
        assert infer_threshold([0.5], [(0.8, 0.75, 0.5)]) == pytest.approx(0.65)

    @settings(max_examples=1000, deadline=None)
    @given(
        local=st.lists(_unit, max_size=5),
        external=st.lists(st.tuples(_unit, _unit, _unit), max_size=5),
        which=st.integers(min_value=0, max_value=3),
        bump=_unit,
    )
    def test_monotone_in_every_argument(self, local, external, which, bump) -> None:
        before = infer_threshold(local, external)
        assert 0.0 <= before <= 1.0
        if which == 0 or not external:
            raised = [min(1.0, e + bump) for e in local]
            after = infer_threshold(raised, external)
        else:
            e, tau, rho = external[0]
            raised = [e, tau, rho]
            raised[which - 1] = min(1.0, raised[which - 1] + bump)
            after = infer_threshold(local, [tuple(raised)] + external[1:])
        assert after >= before - _TOL

    @settings(max_examples=1000, deadline=None)
    @given(
        local=st.lists(_unit, max_size=5),
        external=st.lists(st.tuples(_unit, _unit, _unit), max_size=5),
        c=st.floats(min_value=1e-6, max_value=1.0),
    )
    def test_scaling_never_increases(self, local, external, c) -> None:
        scaled = infer_threshold([c * e for e in local], [(c * e, t, r) for e, t, r in external])
        assert scaled <= infer_threshold(local, external) + _TOL


# ── Tests: pattern inference ─────────────────────────────────────────────


class TestPatternInference:
    def test_feature_phases(self) -> None:
        fv0 = build_features([1.0, 3.0], [], 0.0)
        assert fv0 == pytest.approx((2.0, 3.0, 0.0, 0.0, 1.0))
        fv = build_features([1.0], [], 21600.0)
        assert fv[3] == pytest.approx(1.0)
        assert fv[4] == pytest.approx(0.0, abs=1e-12)

    def test_weighted_peer_z(self) -> None:
        fv = build_features([0.0], [(2.0, 0.5), (4.0, 0.5), (9.0, 0.0)], 0.0)
        assert fv[2] == pytest.approx(3.0)

    def test_no_local_z(self) -> None:
        with pytest.raises(InsufficientHistoryError):
            build_features([], [], 0.0)

    def _store(self, labels: list[bool]) -> HistoryStore:
        store = HistoryStore()
        for i, lab in enumerate(labels):
            store.add((float(i), 0.0, 0.0, 0.0, 0.0), lab)
        return store

    def test_all_positive(self) -> None:
        assert infer_pattern((0.0,) * 5, self._store([True] * 5), k=5) == 1.0

    def test_all_negative(self) -> None:
        assert infer_pattern((0.0,) * 5, self._store([False] * 5), k=5) == 0.0

    def test_nearest_neighbours(self) -> None:
        store = self._store([True, True, False, False, False])
        assert infer_pattern((0.1, 0.0, 0.0, 0.0, 0.0), store, k=3) == pytest.approx(2 / 3)

    def test_fallback_when_short(self) -> None:
        assert infer_pattern((0.0,) * 5, self._store([True] * 4), k=5) is None

    def test_tie_goes_to_older_entry(self) -> None:
        store = HistoryStore()
        store.add((1.0, 0.0, 0.0, 0.0, 0.0), True)
        store.add((-1.0, 0.0, 0.0, 0.0, 0.0), False)
        assert infer_pattern((0.0,) * 5, store, k=1) == 1.0

    def test_capacity_drops_oldest(self) -> None:
        store = HistoryStore(capacity=3)
        for i in range(5):
            store.add((float(i), 0.0, 0.0, 0.0, 0.0), i >= 3)
        x, y = store.arrays()
        assert len(store) == 3
        assert x[:, 0].tolist() == [2.0, 3.0, 4.0]
        assert y.tolist() == [False, True, True]

    def test_combine(self) -> None:
        assert combine_inference(0.3, 0.8, InferenceMode.MAX) == 0.8
        assert combine_inference(0.4, None, InferenceMode.PATTERN_ONLY) == 0.4
        assert combine_inference(0.65, 0.1, InferenceMode.THRESHOLD_ONLY) == 0.65
        assert combine_inference(0.3, 0.1, InferenceMode.PATTERN_ONLY) == 0.1


# ── Tests: planning ──────────────────────────────────────────────────────


def _brute_force_plan(p, positions, radii, cfg, em, link, qm, world):
    """Reference planner: every candidate built independently, then filtered."""
    total = len(positions)
    q_req = cfg.q_min + p * (cfg.q_max - cfg.q_min)
    alerting = cfg.app_type in (AppType.EVENT_DRIVEN, AppType.HYBRID) and p >= cfg.p_alert
    candidates = []
    for n in range(1, total + 1):
        c = coverage(positions[:n], radii[:n], world, qm.grid_resolution)
        for interval in cfg.interval_set:
            q = quality_from_coverage(c, interval, link.pdr, qm)
            ok = q >= q_req
            if alerting:
                ok = ok and interval <= cfg.alert_max_interval and n >= cfg.alert_min_nodes
            if ok:
                e = energy_rate(NetworkConfig(n, interval, alerting), total, em)
                candidates.append((e, -q, n, -interval, NetworkConfig(n, interval, alerting)))
    if not candidates:
        return NetworkConfig(total, cfg.interval_set[0], p >= cfg.p_alert), True
    return min(candidates, key=lambda c: c[:4])[4], False


class TestQualityRequired:
    def test_examples(self) -> None:
        cfg = PlannerConfig()
        assert quality_required(0.0, cfg) == pytest.approx(0.2)
        assert quality_required(1.0, cfg) == pytest.approx(0.9)
        assert quality_required(0.5, cfg) == pytest.approx(0.55)

    def test_empty_interval_set(self) -> None:
        with pytest.raises(ValueError, match="interval_set"):
            PlannerConfig(interval_set=())


class TestPlan:
    def setup_method(self) -> None:
        self.world = World(100.0, 100.0)
        self.em = EnergyModel()

    def test_matches_brute_force(self) -> None:
        rng = np.random.default_rng(2024)
        all_intervals = [10.0, 30.0, 60.0, 120.0, 300.0]
        for _ in range(200):
            total = int(rng.integers(1, 7))
            positions = [Position(float(rng.uniform(0, 100)), float(rng.uniform(0, 100))) for _ in range(total)]
            radii = [float(rng.uniform(10, 50)) for _ in range(total)]
            k = int(rng.integers(1, len(all_intervals) + 1))
            intervals = tuple(sorted(rng.choice(all_intervals, size=k, replace=False).tolist()))
            q_min = float(rng.uniform(0.0, 0.5))
            cfg = PlannerConfig(
                interval_set=intervals,
                q_min=q_min,
                q_max=float(rng.uniform(q_min + 0.05, 1.0)),
                app_type=list(AppType)[int(rng.integers(0, 3))],
                alert_max_interval=float(rng.choice([10.0, 30.0, 60.0])),
                alert_min_nodes=int(rng.integers(1, total + 1)),
            )
            link = LinkModel(pdr=float(rng.uniform(0.5, 1.0)))
            qm = QualityModel(ref_interval=intervals[0])
            p = float(rng.uniform(0, 1))
            got = plan(p, total, positions, radii, cfg, self.em, link, qm, self.world)
            expected, degraded = _brute_force_plan(p, positions, radii, cfg, self.em, link, qm, self.world)
            assert got.config == expected
            assert got.degraded == degraded

    def test_alert_constraints_hold(self) -> None:
        positions = [Position(x, y) for x in (25.0, 75.0) for y in (25.0, 75.0)]
        cfg = PlannerConfig(app_type=AppType.EVENT_DRIVEN, alert_min_nodes=3)
        result = plan(1.0, 4, positions, [40.0] * 4, cfg, self.em, LinkModel(),
                      QualityModel(ref_interval=10.0), self.world)
        assert result.config.report_interval <= cfg.alert_max_interval
        assert result.config.n_active >= 3
        assert result.config.alert_mode

    def test_default_alert_min_nodes_is_half_the_network(self) -> None:
        cfg = PlannerConfig(app_type=AppType.EVENT_DRIVEN)
        assert cfg.min_alert_nodes(6) == 3
        assert cfg.min_alert_nodes(5) == 3
        assert cfg.min_alert_nodes(1) == 1
        assert PlannerConfig(alert_min_nodes=2).min_alert_nodes(6) == 2
        positions = [Position(50.0, 50.0)] * 6
        result = plan(1.0, 6, positions, [100.0] * 6, cfg, self.em, LinkModel(pdr=1.0),
                      QualityModel(ref_interval=10.0), self.world)
        assert not result.degraded
        assert result.config == NetworkConfig(3, 10.0, True)

    def test_singleton_space(self) -> None:
        cfg = PlannerConfig(interval_set=(60.0,))
        for p in (0.0, 0.5, 1.0):
            result = plan(p, 1, [Position(50, 50)], [10.0], cfg, self.em, LinkModel(),
                          QualityModel(ref_interval=60.0), self.world)
            assert (result.config.n_active, result.config.report_interval) == (1, 60.0)

    def test_degraded_is_max_effort(self) -> None:
        cfg = PlannerConfig(q_min=0.9, q_max=0.95)
        result = plan(0.7, 2, [Position(10, 10), Position(20, 20)], [5.0, 5.0], cfg, self.em,
                      LinkModel(), QualityModel(ref_interval=10.0), self.world)
        assert result.degraded
        assert result.config == NetworkConfig(2, 10.0, True)

    def test_energy_monotone_in_probability(self) -> None:
        scenario = load_scenario(CANONICAL)
        net = scenario.network("B")
        nodes = sorted(net.nodes, key=lambda n: n.node_id)
        settings_ = net.gateway.settings
        results = [
            plan(p, len(nodes), [n.position for n in nodes], [n.sensing_radius for n in nodes],
                 settings_.planner, net.energy, net.link, settings_.quality_model, scenario.world)
            for p in (0.0, 0.25, 0.5, 0.75, 1.0)
        ]
        usable = [r for r in results if not r.degraded]
        assert usable
        for lo, hi in zip(usable, usable[1:]):
            assert lo.energy <= hi.energy + _TOL
        assert results[0].energy <= results[-1].energy + _TOL


# ── Tests: the MAPE loop ─────────────────────────────────────────────────


def _quiet_batch(t: float, n: int = 4, value: float = 20.0) -> list[Measurement]:
    view = _view(n)
    return [_m(f"n{i}", value + 0.01 * ((int(t) // 30 + i) % 3), t, p.x, p.y)
            for i, p in enumerate(view.positions)]


def _summary(t: float) -> SummaryReport:
    return SummaryReport("EG-X", "Temperature", t - 30.0, t, 25.0, 1.0, 4, 3.0,
                         Position(50, 50), 40.0, 0.9)


class TestGateway:
    def test_first_plan_then_hysteresis(self) -> None:
        gw = Gateway("EG-N", "N", "Temperature", _settings())
        changes = [gw.mape_tick(_quiet_batch(t), [], t, _view()).config_change
                   for t in range(0, 30 * 40, 30)]
        assert changes[0] is not None
        assert all(c is None for c in changes[1:])

    def test_frozen_does_not_plan(self) -> None:
        gw = Gateway("EG-N", "N", "Temperature", _settings())
        out = gw.mape_tick(_quiet_batch(0.0), [], 0.0, _view(), frozen=True)
        assert out.config_change is None
        assert out.summary is not None

    def test_warm_up_label_not_visible_to_its_own_query(self) -> None:
        gw = Gateway("EG-N", "N", "Temperature",
                     replace(_settings(), mode=InferenceMode.PATTERN_ONLY, k=3))
        for t in range(0, 30 * 30, 30):
            gw.mape_tick(_quiet_batch(t), [], t, _view(), label=False, frozen=True)
        before = len(gw.store)
        assert before >= 3
        out = gw.mape_tick(_quiet_batch(900.0), [], 900.0, _view(), label=True, frozen=True)
        assert out.p_pattern == 0.0
        assert out.p == 0.0
        assert out.alerts == []
        assert len(gw.store) == before + 1
        assert gw.store.arrays()[1][-1]

    def test_alert_on_upward_crossing(self) -> None:
        gw = Gateway("EG-N", "N", "Temperature", _settings())
        first = gw.mape_tick(_quiet_batch(0.0), [], 0.0, _view())
        assert first.alerts == []
        hot = gw.mape_tick(_quiet_batch(30.0, value=45.0), [], 30.0, _view())
        assert hot.p == pytest.approx(1.0)
        assert hot.alerts == [30.0]
        still_hot = gw.mape_tick(_quiet_batch(60.0, value=45.0), [], 60.0, _view())
        assert still_hot.alerts == []

    def test_no_peers_equals_zero_relevance(self) -> None:
        alone = Gateway("EG-N", "N", "Temperature", _settings())
        muted = Gateway("EG-N", "N", "Temperature", _settings(), relevance={"EG-X": 0.0})
        for t in range(0, 30 * 12, 30):
            a = alone.mape_tick(_quiet_batch(t), [], t, _view())
            b = muted.mape_tick(_quiet_batch(t), [_summary(t)], t, _view())
            assert a.p == b.p
            assert a.config_change == b.config_change
        assert muted.trust["EG-X"].updates > 0

    def test_stale_peer_ignored(self) -> None:
        gw = Gateway("EG-N", "N", "Temperature", _settings(), relevance={"EG-X": 1.0})
        gw.trust["EG-X"] = TrustRecord("EG-X", 1.0)
        fresh = gw.mape_tick([], [_summary(0.0)], 0.0, _view())
        assert fresh.p == pytest.approx(0.9)
        stale = gw.mape_tick([], [], 0.0 + 30.0 * 4, _view())
        assert stale.p == 0.0

    def test_static_gateway_never_reconfigures(self) -> None:
        gw = Gateway("EG-N", "N", "Temperature", _settings(), static=True)
        gw.current = NetworkConfig(4, 10.0)
        outs = [gw.mape_tick(_quiet_batch(t, value=45.0), [], t, _view()) for t in (0.0, 30.0)]
        assert all(o.config_change is None for o in outs)
