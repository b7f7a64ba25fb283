"""Relative layered grid graph over absolute nanometer coordinates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .tech import HORIZONTAL_LAYERS, LAYERS, ConfigError, TechConfig


class Vertex(NamedTuple):
    layer: int
    row: int
    col: int

    def __str__(self) -> str:
        return f"({self.layer};{self.row};{self.col})"


class Edge(NamedTuple):
    u: int
    v: int
    via: bool
    length: int  # Euclidean length in nm; 0 for vias


def build_column_sets(cfg: TechConfig, w_total: int) -> dict[int, tuple[int, ...]]:
    if w_total <= 0:
        raise ConfigError("cell width must be positive")
    cols: dict[int, tuple[int, ...]] = {}
    for i in (1, 3):
        cols[i] = tuple(range(cfg.delta[i], w_total + 1, cfg.mp[i]))
        if not cols[i]:
            raise ConfigError(f"layer {i} has no columns: width {w_total} < offset {cfg.delta[i]}")
    for i in (2, 4):
        above = cols.get(i + 1, ())
        cols[i] = tuple(sorted(set(cols[i - 1]) | set(above)))
    return cols


def build_rows(cfg: TechConfig) -> tuple[int, ...]:
    return tuple(h * cfg.mp[2] for h in range(1, cfg.row_count + 1))


@dataclass
class GridGraph:
    w_total: int
    rows: tuple[int, ...]
    columns: dict[int, tuple[int, ...]]
    vertices: list[Vertex] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    index: dict[Vertex, int] = field(default_factory=dict)
    adjacency: list[list[int]] = field(default_factory=list)  # vertex -> incident edge ids

    def vertex_id(self, layer: int, row: int, col: int) -> int | None:
        return self.index.get(Vertex(layer, row, col))

    def layer_vertices(self, layer: int) -> list[int]:
        return [i for i, v in enumerate(self.vertices) if v.layer == layer]

    def edge_between(self, a: int, b: int) -> int | None:
        for e in self.adjacency[a]:
            ed = self.edges[e]
            if ed.u == b or ed.v == b:
                return e
        return None

    def neighbor(self, vid: int, direction: str) -> int | None:
        """Nearest same-layer vertex to the left/right (L/R) or below/above (F/B)."""
        v = self.vertices[vid]
        if direction in ("L", "R"):
            cols = self.columns[v.layer]
            j = cols.index(v.col) + (-1 if direction == "L" else 1)
            if 0 <= j < len(cols):
                return self.vertex_id(v.layer, v.row, cols[j])
            return None
        j = self.rows.index(v.row) + (-1 if direction == "F" else 1)
        if 0 <= j < len(self.rows):
            return self.vertex_id(v.layer, self.rows[j], v.col)
        return None

    def num_arcs(self) -> int:
        return 2 * len(self.edges)


def build_grid(cfg: TechConfig, w_total: int, layers: tuple[int, ...] = LAYERS) -> GridGraph:
    cols = build_column_sets(cfg, w_total)
    g = GridGraph(w_total, build_rows(cfg), cols)
    for i in layers:
        horizontal = i in HORIZONTAL_LAYERS
        for r in g.rows:
            for c in cols[i]:
                vid = len(g.vertices)
                vtx = Vertex(i, r, c)
                g.vertices.append(vtx)
                g.index[vtx] = vid
                g.adjacency.append([])
                if horizontal:
                    k = cols[i].index(c)
                    if k > 0:
                        _add_edge(g, g.index[Vertex(i, r, cols[i][k - 1])], vid, False)
                else:
                    k = g.rows.index(r)
                    if k > 0:
                        _add_edge(g, g.index[Vertex(i, g.rows[k - 1], c)], vid, False)
                below = g.index.get(Vertex(i - 1, r, c))
                if below is not None:
                    _add_edge(g, below, vid, True)
    return g


def _add_edge(g: GridGraph, a: int, b: int, via: bool) -> None:
    va, vb = g.vertices[a], g.vertices[b]
    length = 0 if via else abs(va.row - vb.row) + abs(va.col - vb.col)
    eid = len(g.edges)
    g.edges.append(Edge(a, b, via, length))
    g.adjacency[a].append(eid)
    g.adjacency[b].append(eid)


@dataclass(frozen=True)
class ArcView:
    """Directed view: arc ``2e`` runs u -> v of edge ``e``, arc ``2e + 1`` runs v -> u."""

    tails: tuple[int, ...]
    heads: tuple[int, ...]
    out_arcs: tuple[tuple[int, ...], ...]
    in_arcs: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.tails)

    @staticmethod
    def reverse(arc: int) -> int:
        return arc ^ 1


def arc_view(g: GridGraph) -> ArcView:
    tails: list[int] = []
    heads: list[int] = []
    out: list[list[int]] = [[] for _ in g.vertices]
    inc: list[list[int]] = [[] for _ in g.vertices]
    for e in g.edges:
        for t, h in ((e.u, e.v), (e.v, e.u)):
            a = len(tails)
            tails.append(t)
            heads.append(h)
            out[t].append(a)
            inc[h].append(a)
    return ArcView(tuple(tails), tuple(heads), tuple(map(tuple, out)), tuple(map(tuple, inc)))


def dump_grid(g: GridGraph) -> str:
    lines = [f"grid w_total={g.w_total}", "rows " + " ".join(map(str, g.rows))]
    for i in sorted(g.columns):
        lines.append(f"C{i} " + " ".join(map(str, g.columns[i])))
    for k, v in enumerate(g.vertices):
        lines.append(f"v {k} {v.layer} {v.row} {v.col}")
    for k, e in enumerate(g.edges):
        lines.append(f"e {k} {e.u} {e.v} {'via' if e.via else 'wire'} {e.length}")
    return "\n".join(lines) + "\n"
