import itertools

import pytest

from reordernet.topology import (
    InfeasibleSpec,
    Topology,
    bfs_distances,
    build_topology,
    k_shortest_paths,
    next_hop_sets,
)


def test_clos_counts():
    topo = build_topology({"kind": "clos", "spines": 2, "leaves": 2, "hosts_per_leaf": 4})
    assert len(topo.switches) == 4
    assert len(topo.hosts) == 8
    assert len(topo.switch_links()) == 4  # every leaf to every spine
    assert topo.is_connected()


def test_fattree_counts():
    topo = build_topology({"kind": "fattree", "k": 4})
    assert len(topo.switches) == 20  # 5k^2/4
    assert len(topo.hosts) == 16  # k^3/4
    assert topo.is_connected()
    # Standard wiring: every switch has k ports.
    for sw in topo.switches:
        assert len(topo.adj[sw]) == 4


def test_fattree_odd_arity_rejected():
    with pytest.raises(InfeasibleSpec):
        build_topology({"kind": "fattree", "k": 3})


def test_jellyfish_regular_and_connected():
    topo = build_topology({"kind": "jellyfish", "switches": 10, "degree": 3,
                           "hosts": 10, "seed": 7})
    hostset = set(topo.hosts)
    for sw in topo.switches:
        network = [nb for nb in topo.adj[sw] if nb not in hostset]
        assert len(network) == 3
    assert topo.is_connected()


def test_jellyfish_deterministic_by_seed():
    a = build_topology({"kind": "jellyfish", "switches": 12, "degree": 4,
                        "hosts": 6, "seed": 3})
    b = build_topology({"kind": "jellyfish", "switches": 12, "degree": 4,
                        "hosts": 6, "seed": 3})
    c = build_topology({"kind": "jellyfish", "switches": 12, "degree": 4,
                        "hosts": 6, "seed": 4})
    assert a.links() == b.links()
    assert a.links() != c.links()


def test_jellyfish_infeasible():
    with pytest.raises(InfeasibleSpec):
        build_topology({"kind": "jellyfish", "switches": 5, "degree": 3,
                        "hosts": 2, "seed": 1})  # odd stub count
    with pytest.raises(InfeasibleSpec):
        build_topology({"kind": "jellyfish", "switches": 4, "degree": 4,
                        "hosts": 2, "seed": 1})  # degree >= switches


def _ring4() -> Topology:
    topo = Topology(kind="ring")
    topo.switches = ["a", "b", "c", "d"]
    for x, y in (("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")):
        topo.add_link(x, y)
    return topo


def test_k_shortest_opposite_corners():
    topo = _ring4()
    paths = k_shortest_paths(topo, "a", "c", 2)
    assert sorted(paths) == [["a", "b", "c"], ["a", "d", "c"]]
    assert [len(p) for p in paths] == [3, 3]


def test_k_shortest_adjacent_and_overask():
    topo = _ring4()
    assert k_shortest_paths(topo, "a", "b", 1) == [["a", "b"]]
    paths = k_shortest_paths(topo, "a", "b", 10)
    # All loop-free paths, nondecreasing length.
    assert paths[0] == ["a", "b"]
    assert [len(p) for p in paths] == sorted(len(p) for p in paths)
    for p in paths:
        assert len(set(p)) == len(p)


def test_k_shortest_excludes_dead_links_and_hosts():
    topo = build_topology({"kind": "clos", "spines": 2, "leaves": 2, "hosts_per_leaf": 1})
    paths = k_shortest_paths(topo, "h0", "h1", 4)
    assert len(paths) == 2  # one via each spine
    for p in paths:
        assert p[0] == "h0" and p[-1] == "h1"
        assert all(n.startswith(("leaf", "spine")) for n in p[1:-1])
    dead = {("leaf0", "spine0")}
    paths = k_shortest_paths(topo, "h0", "h1", 4, dead_links=dead)
    assert len(paths) == 1
    assert "spine1" in paths[0]


def test_next_hop_sets_equal_cost():
    topo = build_topology({"kind": "clos", "spines": 4, "leaves": 2, "hosts_per_leaf": 2})
    table = next_hop_sets(topo)
    # Cross-leaf destination: all four spines are equal-cost from the far leaf.
    assert table["leaf0"]["h2"] == ["spine0", "spine1", "spine2", "spine3"]
    # Locally attached destination: the host port itself.
    assert table["leaf0"]["h0"] == ["h0"]
    dead = {("leaf0", "spine2")}
    table = next_hop_sets(topo, dead)
    assert table["leaf0"]["h2"] == ["spine0", "spine1", "spine3"]


def test_bfs_distances_host_terminal():
    topo = build_topology({"kind": "clos", "spines": 2, "leaves": 2, "hosts_per_leaf": 2})
    dist = bfs_distances(topo, "h0")
    assert dist["h0"] == 0
    assert dist["leaf0"] == 1
    assert dist["h1"] == 2  # same leaf
    assert dist["h2"] == 4  # via a spine
    # Paths never pass through other hosts.
    assert all(dist[h] >= 2 for h in topo.hosts if h != "h0")
