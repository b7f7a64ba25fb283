import logging
import math

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from cellforge.accel import (ClusterSet, GapPolicy, box_hpwl, build_circuit_graph, cluster_netlist, dump_clusters,
                             embed_and_cluster, gap_termination, hpwl, parse_clusters, relative_gap,
                             spring_embedding)
from cellforge.accel import cluster as cluster_mod
from cellforge.netlist import bundled_cell, bundled_cell_names, parse_netlist

TWO_PAIRS = """.SUBCKT PAIRS a b z1 z2 VDD VSS
*.PININFO a:I b:I z1:O z2:O VDD:P VSS:G
MN0 n1 a VSS VSS nmos w=1
MN1 z1 n1 VSS VSS nmos w=1
MN2 n2 b VSS VSS nmos w=1
MN3 z2 n2 VSS VSS nmos w=1
.ENDS
"""


def two_pairs():
    return parse_netlist(TWO_PAIRS)


def test_circuit_graph_drops_power_and_links_pairs():
    g = build_circuit_graph(two_pairs())
    assert set(g.edges) == {("MN0", "MN1"), ("MN2", "MN3")}


def test_wide_nets_become_hubs():
    g = build_circuit_graph(bundled_cell("NAND2_X1"))
    hubs = [v for v, a in g.nodes(data=True) if a["kind"] == "net"]
    for h in hubs:
        assert all(g.edges[h, t]["weight"] == g.degree(h) for t in g.neighbors(h))


def test_two_disconnected_pairs():
    cs = cluster_netlist(two_pairs(), k_max=4)
    assert sorted(map(sorted, cs.clusters)) == [["MN0", "MN1"], ["MN2", "MN3"]]
    assert not cs.noise


def test_clustering_is_deterministic():
    nl = bundled_cell("DFFHQN_X1")
    first = cluster_netlist(nl, k_max=4, seed=3)
    assert all(cluster_netlist(nl, k_max=4, seed=3) == first for _ in range(9))


def test_kmax_caps_clique():
    g = nx.complete_graph([f"M{i}" for i in range(6)])
    nx.set_node_attributes(g, "tr", "kind")
    nx.set_edge_attributes(g, 1.0, "weight")
    cs = embed_and_cluster(g, 2, 2)
    assert all(len(c) <= 2 for c in cs.clusters)


@pytest.mark.parametrize("cell", bundled_cell_names())
def test_cluster_set_invariants(cell):
    nl = bundled_cell(cell)
    cs = cluster_netlist(nl, k_max=4)
    ids = {t.id for t in nl.transistors}
    members = [d for c in cs.clusters for d in c]
    assert len(members) == len(set(members))
    assert set(members) | cs.noise <= ids
    assert all(2 <= len(c) <= 4 for c in cs.clusters)


def test_bad_cluster_parameters():
    with pytest.raises(ValueError):
        cluster_netlist(two_pairs(), k_max=7)
    with pytest.raises(ValueError):
        ClusterSet((frozenset({"a", "b"}),), frozenset({"a"}))


def test_embedding_failure_disables_clustering(monkeypatch, caplog):
    monkeypatch.setattr(cluster_mod, "spring_embedding", lambda g, seed=0: None)
    with caplog.at_level(logging.WARNING):
        cs = cluster_netlist(two_pairs())
    assert cs.clusters == () and "did not converge" in caplog.text


def test_embedding_converges_on_bundled_cells():
    for cell in bundled_cell_names():
        assert spring_embedding(build_circuit_graph(bundled_cell(cell))) is not None


def test_embedding_separates_components():
    pos = spring_embedding(build_circuit_graph(two_pairs()))
    d = lambda a, b: math.dist(pos[a], pos[b])
    assert max(d("MN0", "MN1"), d("MN2", "MN3")) < min(d("MN0", "MN2"), d("MN1", "MN3"))


def test_dump_round_trip():
    cs = cluster_netlist(bundled_cell("DFFHQN_X1"), k_max=4)
    text = dump_clusters(cs, "DFFHQN_X1")
    assert text.startswith("cell DFFHQN_X1 kmin 2 kmax 4 seed 0")
    assert parse_clusters(text) == cs


def test_hpwl_examples():
    assert hpwl([(0, 0), (45, 30)]) == 75
    assert hpwl([(10, 10)]) == 0
    assert hpwl([]) == 0


def test_box_hpwl():
    assert box_hpwl([(0, 0, 10, 10), (5, 5, 20, 20)]) == 0
    assert box_hpwl([(0, 0, 0, 0), (45, 30, 90, 60)]) == 75
    assert box_hpwl([(0, 0, 0, 0)]) == 0


def test_gap_examples():
    pol = GapPolicy(relative_gap=0.005)
    assert relative_gap(201, 200) == pytest.approx(1 / 201, abs=1e-12)
    assert gap_termination(pol, 201, 200) == "stop"
    assert gap_termination(GapPolicy(), 5010, 5010) == "stop"
    assert gap_termination(GapPolicy(), 5011, 5010) == "continue"
    assert gap_termination(GapPolicy(time_limit=5), 5011, 0, elapsed=5) == "stop"


def test_zero_bound():
    assert relative_gap(0, 0) == 0
    assert gap_termination(GapPolicy(), 0, 0) == "stop"
    # objectives can be negative in general models; zero then proves nothing
    assert gap_termination(GapPolicy(), 0, -3) == "continue"


@given(st.integers(1, 10_000), st.integers(0, 10_000), st.integers(0, 100), st.integers(0, 100),
       st.floats(0, 0.5))
def test_gap_termination_monotone(ob, lb, drop, rise, g):
    lb = min(lb, ob)
    pol = GapPolicy(relative_gap=g)
    if gap_termination(pol, ob, lb) == "stop":
        ob2 = max(lb, ob - drop)
        lb2 = min(ob2, lb + rise)
        assert gap_termination(pol, ob2, lb2) == "stop"
