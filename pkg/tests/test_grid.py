import pytest

from cellforge.grid import ArcView, Vertex, arc_view, build_column_sets, build_grid, build_rows, dump_grid
from cellforge.tech import ConfigError, load_tech


def tech(mp3=45, d3=0, rows=4):
    from dataclasses import replace

    return replace(load_tech().with_gear_ratio(mp3, d3), row_count=rows)


def test_poly_columns():
    assert build_column_sets(tech(), 90)[1] == (0, 45, 90)


def test_three_two_columns_merge():
    c = build_column_sets(tech(30), 90)
    assert c[3] == (0, 30, 60, 90)
    assert c[2] == tuple(sorted(set(c[1]) | set(c[3]))) == (0, 30, 45, 60, 90)
    assert c[4] == c[3]


def test_offset_nine_columns():
    c3 = build_column_sets(tech(27, 9), 315)[3]
    assert len(c3) == 12 and 0 not in c3 and 315 not in c3


def test_empty_column_set_is_config_error():
    with pytest.raises(ConfigError):
        build_column_sets(tech(), 0)


def test_closed_form_counts():
    g = build_grid(tech(), 45)
    R = g.rows
    for i in (1, 2, 3, 4):
        assert len(g.layer_vertices(i)) == len(R) * len(g.columns[i])
    wires = [e for e in g.edges if not e.via]
    horiz = sum(len(R) * (len(g.columns[i]) - 1) for i in (2, 4))
    vert = sum(len(g.columns[i]) * (len(R) - 1) for i in (1, 3))
    assert len(wires) == horiz + vert


def test_vias_exactly_on_shared_points():
    g = build_grid(tech(30), 90)
    vias = {(g.vertices[e.u], g.vertices[e.v]) for e in g.edges if e.via}
    expect = set()
    for lo in (1, 2, 3):
        shared = set(g.columns[lo]) & set(g.columns[lo + 1])
        for r in g.rows:
            for c in shared:
                expect.add((Vertex(lo, r, c), Vertex(lo + 1, r, c)))
    assert vias == expect
    l23 = {(a.row, a.col) for a, b in vias if a.layer == 2}
    assert l23 == {(r, c) for r in g.rows for c in g.columns[3]}


def test_irregular_m0_spacing():
    g = build_grid(tech(30), 135)
    lengths = {e.length for e in g.edges if not e.via and g.vertices[e.u].layer == 2}
    assert lengths == {15, 30}
    gaps = {b - a for a, b in zip(g.columns[2], g.columns[2][1:])}
    assert lengths == gaps
    g1 = build_grid(tech(45), 135)
    assert {e.length for e in g1.edges if not e.via and g1.vertices[e.u].layer == 2} == {45}


def test_arc_view_counts_and_symmetry():
    g = build_grid(tech(), 90)
    av = arc_view(g)
    assert len(av) == 2 * len(g.edges)
    for v in range(len(g.vertices)):
        assert len(av.out_arcs[v]) == len(av.in_arcs[v]) == len(g.adjacency[v])
        assert not set(av.out_arcs[v]) & set(av.in_arcs[v])


def test_path_reversal_is_bijective():
    g = build_grid(tech(rows=2), 45, layers=(2,))
    av = arc_view(g)
    arcs = list(range(len(av)))
    rev = [ArcView.reverse(a) for a in arcs]
    assert sorted(rev) == arcs
    for a in arcs:
        assert av.tails[a] == av.heads[rev[a]] and av.heads[a] == av.tails[rev[a]]


def test_rows_shared_by_layers():
    t = tech()
    assert build_rows(t) == (24, 48, 72, 96)
    g = build_grid(t, 90)
    assert {v.row for v in g.vertices} == set(g.rows)


def test_deterministic_dump():
    assert dump_grid(build_grid(tech(30), 135)) == dump_grid(build_grid(tech(30), 135))
    text = dump_grid(build_grid(tech(30), 90))
    assert text.splitlines()[:5] == ["grid w_total=90", "rows 24 48 72 96", "C1 0 45 90",
                                     "C2 0 30 45 60 90", "C3 0 30 60 90"]


def test_neighbors():
    g = build_grid(tech(), 90)
    v = g.vertex_id(2, 48, 45)
    assert g.vertices[g.neighbor(v, "L")].col == 0
    assert g.vertices[g.neighbor(v, "R")].col == 90
    assert g.vertices[g.neighbor(v, "F")].row == 24
    assert g.neighbor(g.vertex_id(2, 24, 0), "L") is None
