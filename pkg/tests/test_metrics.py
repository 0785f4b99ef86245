import csv
import io
import json

import pytest
from hypothesis import given, strategies as st

from crdrl import engine
from crdrl.cli import trace_text
from crdrl.config import Protocol, ScenarioConfig
from crdrl.metrics import (SCALAR_COLUMNS, SERIES, EmptyLog, MetricsReport, StabilitySnapshot,
                           cluster_stability, clustering_quality, compute_kpis, lifetime_markers,
                           link_ranges, windowed_delivery)
from helpers import desk_config

CFG = ScenarioConfig(node_count=2, sim_duration_s=100.0, protocol=Protocol.SCF_EPIDEMIC)


def log_with(*events, n=2):
    end = {"t": 100.0, "kind": "end", "energy": [4800.0] * n, "initial": [4800.0] * n,
           "drained": [0.0] * n, "recharged": [0.0] * n, "in_buffer": [], "max_buffer_fill": [0.0] * n}
    return [{"t": 0.0, "kind": "start"}, *events, end]


def gen(mid, t, size=500_000):
    return {"t": t, "kind": "gen", "msg": mid, "src": 0, "dst": 1, "size": size}


def deliver(mid, t, delay, hops=1, size=500_000):
    return {"t": t, "kind": "deliver", "msg": mid, "hops": hops, "delay": delay, "size": size}


def test_delivery_ratio_nine_of_ten():
    evs = [gen(i, 1.0) for i in range(10)] + [deliver(i, 2.0, 1.0) for i in range(9)]
    rep = compute_kpis(log_with(*evs), CFG)
    assert rep.generated == 10 and rep.delivered == 9
    assert rep.delivery_ratio == pytest.approx(0.9)
    assert rep.throughput_bps == pytest.approx(9 * 500_000 * 8 / 100.0)


def test_nothing_generated_gives_null_ratio():
    rep = compute_kpis(log_with(), CFG)
    assert rep.delivery_ratio is None and rep.mean_e2e_delay_s is None and rep.mean_hops is None
    assert rep.max_hops == 0


def test_delay_is_delivery_minus_creation():
    rep = compute_kpis(log_with(gen(0, 10.0), deliver(0, 70.0, 60.0)), CFG)
    assert rep.mean_e2e_delay_s == pytest.approx(60.0)


def test_empty_log_raises():
    with pytest.raises(EmptyLog):
        compute_kpis([], CFG)
    with pytest.raises(EmptyLog):
        compute_kpis([{"t": 0.0, "kind": "start"}], CFG)


def energies_with_deaths(n, deaths, rounds):
    return [[0.0 if deaths.get(i, rounds + 1) <= k else 1.0 for i in range(n)] for k in range(1, rounds + 1)]


def test_lifetime_markers_four_nodes():
    series = energies_with_deaths(4, {0: 3, 1: 7, 2: 9, 3: 12}, 12)
    fnd, hnd, alive = lifetime_markers(series)
    assert (fnd, hnd) == (3, 7)
    assert alive[0] == 4 and alive[-1] == 0


def test_failed_nodes_do_not_count_as_dead():
    series = energies_with_deaths(4, {0: 2, 1: 5}, 6)
    assert lifetime_markers(series, excluded=[0])[:2] == (5, None)


def test_no_deaths_no_markers():
    assert lifetime_markers([[1.0, 1.0]] * 5)[:2] == (None, None)


@given(st.lists(st.integers(1, 20), min_size=1, max_size=12))
def test_fnd_never_after_hnd(death_rounds):
    n = len(death_rounds)
    fnd, hnd, _ = lifetime_markers(energies_with_deaths(n, dict(enumerate(death_rounds)), 20))
    assert fnd == min(death_rounds)
    assert hnd == sorted(death_rounds)[-(-n // 2) - 1]


def test_stability_head_tenures():
    snaps = [StabilitySnapshot(1, 0.0, [1], {0: 1, 1: 1}),
             StabilitySnapshot(2, 10.0, [1], {0: 1, 1: 1}),
             StabilitySnapshot(3, 20.0, [2], {0: 2, 2: 2})]
    ch, mem, rate = cluster_stability(snaps, 30.0)
    assert ch == pytest.approx(15.0)   # head 1 for 20 s, head 2 for 10 s
    assert mem == pytest.approx(15.0)  # node 0 under head 1 for 20 s, then head 2 for 10 s
    assert rate == pytest.approx(0.5)


def test_stability_without_epochs():
    assert cluster_stability([], 10.0) == (None, None, None)


def test_quality_single_colocated_cluster():
    pos = [[100.0, 100.0]] * 5
    acs, iccc, eccc = clustering_quality([[0, 0, [0, 1, 2, 3, 4], []]], pos, [0] * 5, [100.0] * 5)
    assert (acs, iccc, eccc) == (5.0, 0.0, 0.0)


def test_quality_two_clusters_on_a_line():
    # A=0, a=50, b=130, B=200; links a-b (80) and A-B (200) cross clusters
    pos = [[0, 0], [50, 0], [130, 0], [200, 0]]
    clusters = [[0, 0, [0, 1], []], [1, 3, [2, 3], []]]
    primary = [0, 0, 3, 3]
    ranges = link_ranges(pos, [0, 3], primary, CFG)
    assert list(ranges) == [300.0, 100.0, 100.0, 300.0]
    acs, iccc, eccc = clustering_quality(clusters, pos, primary, ranges)
    assert acs == 2.0 and iccc == 50.0 + 70.0 and eccc == 280.0


def test_extended_member_range_when_far_from_head():
    r = link_ranges([[0, 0], [110, 0]], [0], [0, 0], CFG)
    assert list(r) == [300.0, 120.0]


def test_windowed_delivery():
    gen_t = {0: 1.0, 1: 2.0, 2: 12.0, 3: 13.0}
    assert windowed_delivery(gen_t, {0, 1, 2}, 10.0) == pytest.approx((1.0 + 0.5) / 2)
    assert windowed_delivery({}, set(), 10.0) is None


@pytest.fixture(scope="module")
def live_run():
    cfg = desk_config(seed=6, sim_duration_s=48.0)
    world = engine.simulate(cfg)
    return cfg, world, compute_kpis(world.event_log, cfg)


def test_report_from_trace_matches_live(live_run, tmp_path):
    cfg, world, live = live_run
    path = tmp_path / "trace.ndjson"
    path.write_text(trace_text(world.event_log))
    replayed = [json.loads(line) for line in path.read_text().splitlines()]
    assert compute_kpis(replayed, cfg) == live
    assert live.epochs == 4 and live.acs is not None


def test_json_round_trip(live_run):
    _, _, rep = live_run
    assert MetricsReport.from_dict(json.loads(rep.to_json())) == rep


def test_csv_columns_and_values(live_run):
    _, _, rep = live_run
    rows = list(csv.reader(io.StringIO(rep.csv_row())))
    assert tuple(rows[0]) == SCALAR_COLUMNS and rows[0][0] == "schema_version"
    row = dict(zip(rows[0], rows[1]))
    assert int(row["generated"]) == rep.generated
    assert float(row["mean_residual_energy_frac"]) == rep.mean_residual_energy_frac


def test_series_csv(live_run):
    _, _, rep = live_run
    for name in SERIES:
        rows = list(csv.reader(io.StringIO(rep.series_csv(name))))
        assert len(rows) == len(getattr(rep, name)) + 1
    assert rep.series_csv("episode_rewards").startswith("episode,value\n1,")
