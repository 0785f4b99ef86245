import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crdrl import engine, network
from crdrl.network import Degenerate, LinkRecord, LinkTracker, Role
from helpers import bfs_components, line_world, static_world


def unclustered(world):
    engine.install_clusters(world, [], 100.0)
    world.refresh_adjacency()
    return world


def test_in_range_examples():
    w = unclustered(line_world([0, 0, 150]))
    a, b, c = w.nodes
    assert network.in_range(a, b, w, w.cfg)
    assert not network.in_range(a, c, w, w.cfg)


def test_min_rule_between_head_and_member():
    # head at 0, member at 120 whose own head is close by: 120 > min(300, 100)
    w = line_world([0, 120, 130, 600])
    engine.install_clusters(w, [0, 2], 50.0)
    assert w.nodes[0].role is Role.HEAD and w.nodes[1].primary_head == 2
    assert network.effective_range(w.nodes[1], w, w.cfg) == 100
    assert not network.in_range(w.nodes[0], w.nodes[1], w, w.cfg)


def test_effective_range_by_role():
    w = line_world([0, 50, 200])
    engine.install_clusters(w, [0], 250.0)
    head, near, far = w.nodes
    assert network.effective_range(head, w, w.cfg) == 300
    assert network.effective_range(near, w, w.cfg) == 100
    assert network.effective_range(far, w, w.cfg) == pytest.approx(120)
    assert network.in_range(head, far, w, w.cfg) is False  # 200 > 120
    assert np.allclose(network.effective_ranges(w, w.cfg), [300, 100, 120])


def test_dead_nodes_never_in_range():
    w = unclustered(line_world([0, 10]))
    w.nodes[1].alive = False
    assert not network.in_range(w.nodes[0], w.nodes[1], w, w.cfg)


def test_beacons_fill_neighbor_tables():
    w = unclustered(line_world([0, 60, 500]))
    w.now_s = 1.0
    network.emit_beacons(w, w.cfg, w.refresh_adjacency(), True, True)
    assert 1 in w.nodes[0].neighbors.entries and 0 in w.nodes[1].neighbors.entries
    assert not w.nodes[2].neighbors.entries


def test_member_learns_head_from_head_beacon():
    w = line_world([0, 60])
    engine.install_clusters(w, [0], 100.0)
    w.nodes[1].known_head = None
    w.now_s = 0.1
    network.emit_beacons(w, w.cfg, w.refresh_adjacency(), False, True)
    assert w.nodes[1].known_head == 0
    assert w.nodes[1].neighbors.entries[0].role is Role.HEAD


def test_neighbor_entries_expire():
    t = network.NeighborTable(0)
    t.refresh(1, network.NeighborEntry(0.0, 0, 0, Role.MEMBER))
    t.expire(3.0, 3.0)
    assert 1 in t.entries
    t.expire(3.2, 3.0)
    assert 1 not in t.entries


def chain(n, broken=()):
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        if i not in broken:
            adj[i, i + 1] = adj[i + 1, i] = True
    return adj


def test_partition_examples():
    alive = np.ones(5, dtype=bool)
    full = ~np.eye(5, dtype=bool)
    assert network.partitions(full, alive) == 1
    assert network.partitions(np.zeros((5, 5), dtype=bool), alive) == 5
    assert network.partitions(chain(5, broken={2}), alive) == 2


def test_connectivity_examples():
    alive = np.ones(10, dtype=bool)
    two = np.zeros((10, 10), dtype=bool)
    two[:5, :5] = two[5:, 5:] = True
    np.fill_diagonal(two, False)
    assert network.connectivity_ratio(two, alive) == pytest.approx(100 * 40 / 90)
    assert network.connectivity_ratio(~np.eye(10, dtype=bool), alive) == 100.0
    assert network.connectivity_ratio(np.zeros((10, 10), dtype=bool), alive) == 0.0
    with pytest.raises(Degenerate):
        network.connectivity_ratio(np.zeros((2, 2), dtype=bool), np.array([True, False]))


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 50).flatmap(lambda n: st.tuples(
    st.just(n), st.floats(0, 0.3), st.integers(0, 2**32 - 1))))
def test_union_find_matches_bfs(args):
    n, p, seed = args
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, 1)
    adj = upper | upper.T
    alive = rng.random(n) < 0.9
    assert network.partitions(adj, alive) == bfs_components(adj, alive)
    if alive.sum() >= 2:
        assert (network.connectivity_ratio(adj, alive) == 100.0) == (network.partitions(adj, alive) == 1)


def test_route_reliability():
    assert network.route_reliability([]) == 1.0
    assert network.route_reliability([0.9, 0.8]) == pytest.approx(0.72)
    assert network.route_reliability([0.9, 0.0, 0.7]) == 0.0


@given(st.lists(st.floats(0, 1), max_size=12))
def test_route_reliability_nonincreasing(links):
    vals = [network.route_reliability(links[:k]) for k in range(len(links) + 1)]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_link_tracker_busy_fraction():
    lt = LinkTracker(300.0)
    lt.contact_started(1, 2, 0.0)
    lt.contact_ended(2, 1, 30.0)
    lt.contact_started(1, 2, 60.0)
    rec = lt.record(1, 2, 100.0)
    assert isinstance(rec, LinkRecord) and rec.observed_contacts == 2
    assert rec.reliability_est == pytest.approx(70.0 / 100.0)
    assert network.route_reliability([rec]) == rec.reliability_est


def test_logical_adjacency_adds_head_member_edges():
    w = line_world([0, 150, 900])
    engine.install_clusters(w, [0], 200.0)
    phys = w.refresh_adjacency()
    assert not phys[0, 1]
    logical = network.logical_adjacency(phys, w.clusters.values())
    assert logical[0, 1] and logical[1, 0] and not logical[0, 2]
