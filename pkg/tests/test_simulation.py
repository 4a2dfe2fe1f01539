"""End-to-end tests of the tick loop on shipped and inline scenarios."""

from __future__ import annotations

from dataclasses import replace

import pandas as pd
import pytest

from egsim import simulation
from egsim.metrics import emit_csv
from egsim.scenario import load_scenario
from egsim.simulation import Simulation, peer_relevance, run

from tests.conftest import CANONICAL, FAULTY_PEER, MINIMAL

QUIET = """<?xml version="1.0" encoding="UTF-8"?>
<scenario duration="1000" seed="3">
  <world width="100" height="100"/>
  <environment>
    <field sensor_type="Temperature" baseline="20" noise_sigma="0.2"/>
  </environment>
  <network id="Q" sensor_type="Temperature" sensing_radius="40" battery="500" sensor_sigma="0.1">
    <node id="Q1" x="25" y="25"/>
    <node id="Q2" x="75" y="25"/>
    <node id="Q3" x="25" y="75"/>
    <node id="Q4" x="75" y="75"/>
    <gateway/>
  </network>
</scenario>
"""

SHORT_LIVED = """<?xml version="1.0" encoding="UTF-8"?>
<scenario duration="300">
  <world width="100" height="100"/>
  <environment>
    <field sensor_type="Temperature" baseline="20"/>
  </environment>
  <network id="N" sensor_type="Temperature" sensing_radius="30" battery="2">
    <node id="N1" x="50" y="50"/>
    <gateway/>
  </network>
</scenario>
"""


def _csv_bytes(result, out) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in emit_csv(result.metrics, out)}


# ── Tests: basic runs ────────────────────────────────────────────────────


class TestRun:
    def test_zero_duration(self, tmp_path) -> None:
        sc = replace(load_scenario(MINIMAL), duration=0.0)
        result = run(sc, progress=False)
        assert result.metrics.rows == []
        files = _csv_bytes(result, tmp_path)
        assert files["timeseries.csv"].decode().strip() == (
            "tick,network_id,power_w,energy_j,q,p,n_active,report_interval,alert"
        )

    def test_one_row_per_network_per_tick(self) -> None:
        sc = load_scenario(FAULTY_PEER)
        ts = run(replace(sc, duration=120.0, warm_up=0.0), progress=False).metrics.timeseries()
        assert len(ts) == 3 * 120
        for _net, group in ts.groupby("network_id"):
            assert group["energy_j"].is_monotonic_increasing

    @pytest.mark.parametrize("path", [MINIMAL, FAULTY_PEER, CANONICAL], ids=["minimal", "faulty_peer", "canonical"])
    def test_deterministic(self, path, tmp_path) -> None:
        sc = load_scenario(path)
        first = _csv_bytes(run(sc, progress=False), tmp_path / "a")
        second = _csv_bytes(run(sc, progress=False), tmp_path / "b")
        assert first == second

    def test_seed_changes_output(self, tmp_path) -> None:
        sc = load_scenario(FAULTY_PEER)
        a = _csv_bytes(run(sc, seed=1, progress=False), tmp_path / "a")
        b = _csv_bytes(run(sc, seed=2, progress=False), tmp_path / "b")
        assert a["timeseries.csv"] != b["timeseries.csv"]

    def test_node_death(self, write_scenario) -> None:
        result = run(load_scenario(write_scenario(SHORT_LIVED)), progress=False)
        ts = result.metrics.timeseries()
        assert result.metrics.counts["N"].dead_nodes == 1
        assert ts["n_active"].iloc[-1] == 0
        assert ts["power_w"].iloc[-1] == 0.0
        assert 1.7 < result.total_energy("N") <= 2.0 + 1e-9


# ── Tests: collaboration and isolation ───────────────────────────────────


class TestCollaboration:
    def test_relevance_weights(self) -> None:
        rho = peer_relevance(load_scenario(CANONICAL))
        assert set(rho) == {"EG-A", "EG-B"}
        assert rho["EG-A"]["EG-B"] == pytest.approx(0.8)
        assert rho["EG-A"]["EG-B"] == rho["EG-B"]["EG-A"]

    def test_collaboration_off_matches_peer_absent(self) -> None:
        sc = load_scenario(CANONICAL)
        off = run(sc.with_collaboration(False), progress=False).metrics.timeseries()
        alone_sc = replace(sc, networks=(sc.network("B"),), overlay={})
        alone = run(alone_sc, progress=False).metrics.timeseries()
        pd.testing.assert_frame_equal(
            off[off["network_id"] == "B"].reset_index(drop=True),
            alone.reset_index(drop=True),
        )

    def test_peer_node_count_does_not_shift_streams(self, monkeypatch) -> None:
        sc = load_scenario(CANONICAL)
        net_a = sc.network("A")
        smaller = replace(sc, networks=(replace(net_a, nodes=net_a.nodes[:-1]), sc.network("B")))
        assert smaller.collaboration

        def sampled(scenario, ticks: int = 600) -> dict[str, list[tuple[str, float, float]]]:
            seen: dict[str, list[tuple[str, float, float]]] = {"A": [], "B": []}
            original = simulation.step_network

            def recording(state, cfg, env, t, rng):
                result = original(state, cfg, env, t, rng)
                seen[state.network_id].extend((m.node_id, m.timestamp, m.value) for m in result.reports)
                return result

            monkeypatch.setattr(simulation, "step_network", recording)
            sim = Simulation(scenario)
            for tick_index in range(ticks):
                sim.step(tick_index)
            monkeypatch.setattr(simulation, "step_network", original)
            return seen

        full, reduced = sampled(sc), sampled(smaller)
        assert peer_relevance(sc)["EG-B"]["EG-A"] != peer_relevance(smaller)["EG-B"]["EG-A"]
        assert full["A"] != reduced["A"]
        assert len(full["B"]) > 0
        assert full["B"] == reduced["B"]

    def test_faulty_peer_loses_trust(self) -> None:
        result = run(load_scenario(FAULTY_PEER), progress=False)
        trust_a = result.trust["EG-A"]
        assert trust_a["EG-B"].trust < 0.2
        assert trust_a["EG-C"].trust > 0.5
        assert trust_a["EG-B"].updates > 10

    def test_overlay_counters(self) -> None:
        result = run(load_scenario(FAULTY_PEER), progress=False)
        for net in ("A", "B", "C"):
            c = result.metrics.counts[net]
            assert c.summaries_sent > 0
            assert c.summaries_dropped < c.summaries_sent


# ── Tests: gateway behaviour in the loop ─────────────────────────────────


class TestGatewayLoop:
    def test_quiet_run_reconfigures_once(self, write_scenario) -> None:
        result = run(load_scenario(write_scenario(QUIET)), progress=False)
        assert result.metrics.counts["Q"].config_changes == 1
        assert result.metrics.alerts == []
        assert result.configs["Q"].n_active < 4

    def test_warm_up_freezes_configuration(self) -> None:
        sc = load_scenario(CANONICAL)
        sim = Simulation(replace(sc, duration=2400.0))
        ts = sim.run(progress=False).metrics.timeseries()
        warm = ts[ts["tick"] < sc.warm_up]
        for _net, group in warm.groupby("network_id"):
            assert group["n_active"].nunique() == 1
            assert group["report_interval"].nunique() == 1
        assert all(len(rt.gateway.store) > 0 for rt in sim.runtimes)
        assert sum(sim.metrics.counts[n].config_changes for n in ("A", "B")) > 0

    def test_static_baseline_never_changes(self) -> None:
        sc = load_scenario(CANONICAL)
        result = run(replace(sc, duration=2400.0), static=True, progress=False)
        ts = result.metrics.timeseries()
        assert result.metrics.counts["A"].config_changes == 0
        assert (ts[ts["network_id"] == "B"]["n_active"] == 8).all()
        assert (ts["report_interval"] == 10.0).all()

    def test_fire_is_detected(self) -> None:
        result = run(load_scenario(CANONICAL), progress=False)
        report = result.metrics.detection()
        assert report.misses == 0
        assert report.mean_latency is not None and report.mean_latency <= 120.0
