"""Encode placement, routing, cuts, design rules, pins and the objective.

Placement model
    The cell spans ``N = w_total / mp1`` poly pitches with poly lines at
    ``k * mp1`` for ``k = 0..N``. A transistor occupies one gate slot
    ``k in 1..N-1``; placement column ``j = 2k`` is its gate and the odd
    columns ``2k - 1`` / ``2k + 1`` hold its source/drain (swapped when
    flipped). Each row half (PMOS on top, NMOS below) owns one net per
    source/drain column, so abutting devices must agree on the shared net.

Routing model
    Terminals are "sites" (row half, placement column). Sites reach M0
    through zero-cost access links and reach the opposite row half through
    MOL links that exist only while the column's super cut node is off.
    M1 columns on the cell boundary are dummies and are left out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from ..grid import GridGraph, build_grid
from ..netlist import Kind, Netlist, Terminal, derive_terminals
from ..tech import HORIZONTAL_LAYERS, ROUTING_LAYERS, TechConfig, total_cell_width
from .ir import ConstraintModel


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Site:
    half: str  # "P" or "N"
    col: int  # placement column j
    node: int  # flow-graph node id

    @property
    def is_gate(self) -> bool:
        return self.col % 2 == 0

    @property
    def slot(self) -> int:
        """Gate slot for gate sites; left slot index for S/D sites."""
        return self.col // 2


@dataclass(frozen=True)
class Link:
    a: int
    b: int
    kind: str  # wire | via | access | mol
    cost: int
    grid_edge: Optional[int] = None
    col: Optional[int] = None  # placement column for mol links


@dataclass
class FlowGraph:
    num_nodes: int
    vertex_nodes: list[int]  # usable routing vertices (grid vertex ids double as node ids)
    sites: dict[tuple[str, int], Site]
    links: list[Link]
    incident: list[list[int]]  # node -> link ids

    def other(self, link: int, node: int) -> int:
        lk = self.links[link]
        return lk.b if lk.a == node else lk.a

    def site_of_node(self, node: int) -> Optional[Site]:
        for s in self.sites.values():
            if s.node == node:
                return s
        return None


@dataclass
class Commodity:
    net: str
    sink: Terminal
    # arc key (link id, direction 0 = a->b, 1 = b->a) -> flow variable
    f: dict[tuple[int, int], int] = field(default_factory=dict)


@dataclass
class EncodeOptions:
    clusters: Sequence[Iterable[str]] = ()
    itp: bool = False
    pin_separation: bool = True
    theta: Optional[int] = None  # overrides cfg.theta
    m0_pins: Optional[bool] = None  # overrides cfg.m0_pins_enabled


@dataclass
class Encoding:
    model: ConstraintModel
    cfg: TechConfig
    netlist: Netlist
    grid: GridGraph
    flow: FlowGraph
    w_total: int
    n_pitch: int
    slots: range
    devices: list[str]
    device_kind: dict[str, Kind]
    y: dict[tuple[str, int, int], int]
    x: dict[str, int]
    occ: dict[tuple[str, int], int]
    u: dict[tuple[str, int, str], int]  # S/D site net ownership
    g: dict[tuple[str, int, str], int]  # gate site net (keyed by gate column)
    scx: dict[int, int]
    nets: list[str]
    routed_nets: list[str]
    terminals: dict
    commodities: list[Commodity]
    e: dict[tuple[str, int], int]  # (net, grid link) -> metal
    xl: dict[tuple[str, int], int]  # (net, any link) -> usage by the net
    used: dict[tuple[str, int], int]  # (net, vertex) -> used
    U: dict[int, int]
    M: dict[int, int]  # grid link -> any metal
    gv: dict[tuple[int, str], int]
    pin_pos: dict[str, dict[int, int]]  # pin net -> vertex -> pi var
    pin_ext: dict[str, dict[int, int]]
    pin_open: dict[str, dict[int, int]]  # pin net -> M1 column -> opening var
    a: dict[int, int]
    abut: dict[tuple[str, int], int]
    merge: dict[tuple[int, str], int]
    m2rows: dict[int, int]
    m0_pins: bool
    theta: int
    objective_terms: dict[str, list[tuple[int, int]]]
    objective_consts: dict[str, int]
    half_rows: dict[str, tuple[int, ...]]
    arc_cost: dict[tuple[int, int], int] = field(default_factory=dict)

    def component_value(self, name: str, values: Sequence[int]) -> int:
        return self.objective_consts.get(name, 0) + sum(c * values[v] for c, v in self.objective_terms[name])


def cell_width_for(netlist: Netlist, cfg: TechConfig) -> int:
    w_p = netlist.width_sum(Kind.PMOS) * cfg.mp[1]
    w_n = netlist.width_sum(Kind.NMOS) * cfg.mp[1]
    return total_cell_width(w_p, w_n, cfg.c_db, cfg.mp[1])


def _half(kind: Kind) -> str:
    return "P" if kind is Kind.PMOS else "N"


class Encoder:
    def __init__(self, netlist: Netlist, cfg: TechConfig, options: EncodeOptions | None = None):
        if any(t.width_units != 1 for t in netlist.transistors):
            raise EncodingError("encoder expects single-finger devices; fold the netlist first")
        self.nl = netlist
        self.cfg = cfg
        self.opt = options or EncodeOptions()
        self.m = ConstraintModel(name=netlist.name)
        self.w_total = cell_width_for(netlist, cfg)
        self.N = self.w_total // cfg.mp[1]
        self.slots = range(1, self.N)
        self.grid = build_grid(cfg, self.w_total)
        t = cfg.row_count
        rows = self.grid.rows
        self.half_rows = {"N": rows[: t // 2] or rows[:1], "P": rows[t // 2:]}
        self.m0_pins = cfg.m0_pins_enabled if self.opt.m0_pins is None else self.opt.m0_pins
        self.theta = cfg.theta if self.opt.theta is None else self.opt.theta

    # ------------------------------------------------------------------ build
    def build(self) -> Encoding:
        m = self.m
        self._placement()
        self._cuts()
        self._flow_graph()
        self._routing()
        self._geometry()
        self._design_rules()
        self._pins()
        self._accel()
        self._objective()
        m.check_wellformed()
        return self.enc

    # -------------------------------------------------------------- placement
    def _placement(self) -> None:
        m, nl = self.m, self.nl
        devs = [t.id for t in nl.transistors]
        self.kind = {t.id: t.kind for t in nl.transistors}
        self.dev = nl.device
        self.y: dict[tuple[str, int, int], int] = {}
        self.x: dict[str, int] = {}
        for d in devs:
            lits = []
            for k in self.slots:
                for phi in (0, 1):
                    v = m.new_bool(f"y[{d},{k},{phi}]")
                    self.y[d, k, phi] = v
                    lits.append(v)
            if not lits:
                raise EncodingError("cell has no gate slots")
            m.add_eq([(1, v) for v in lits], 1, tag=f"place_{d}")
            xv = m.new_int(f"x[{d}]", self.slots.start, self.slots.stop - 1)
            self.x[d] = xv
            m.add_eq([(k, self.y[d, k, p]) for k in self.slots for p in (0, 1)] + [(-1, xv)], 0, tag=f"x_{d}")
        self.occ: dict[tuple[str, int], int] = {}
        for half in ("P", "N"):
            members = [d for d in devs if _half(self.kind[d]) == half]
            for k in self.slots:
                o = m.new_bool(f"occ[{half},{k}]")
                self.occ[half, k] = o
                m.add_eq([(1, self.y[d, k, p]) for d in members for p in (0, 1)] + [(-1, o)], 0,
                         tag=f"overlap_{half}{k}")
        # S/D net ownership per site
        self.u: dict[tuple[str, int, str], int] = {}
        contrib: dict[tuple[str, int, str], list[int]] = {}
        for d in devs:
            tr = self.dev[d]
            half = _half(tr.kind)
            for k in self.slots:
                for phi in (0, 1):
                    left, right = (tr.source_net, tr.drain_net) if phi == 0 else (tr.drain_net, tr.source_net)
                    contrib.setdefault((half, 2 * k - 1, left), []).append(self.y[d, k, phi])
                    contrib.setdefault((half, 2 * k + 1, right), []).append(self.y[d, k, phi])
        for (half, j, net), ys in sorted(contrib.items()):
            uv = m.new_bool(f"u[{half},{j},{net}]")
            self.u[half, j, net] = uv
            for yv in ys:
                m.add_implies([yv], uv, tag="own")
            m.add_implies([uv], ys, tag="own")
        for half in ("P", "N"):
            for j in range(1, 2 * self.N, 2):
                owners = [v for (h, jj, _), v in self.u.items() if h == half and jj == j]
                if len(owners) > 1:
                    m.add_atmost(owners, 1, tag=f"share_{half}{j}")
        self.g: dict[tuple[str, int, str], int] = {}
        for half in ("P", "N"):
            members = [d for d in devs if _half(self.kind[d]) == half]
            gate_nets = sorted({self.dev[d].gate_net for d in members})
            for k in self.slots:
                for net in gate_nets:
                    gv = m.new_bool(f"g[{half},{2 * k},{net}]")
                    self.g[half, 2 * k, net] = gv
                    m.add_eq([(1, self.y[d, k, p]) for d in members if self.dev[d].gate_net == net
                              for p in (0, 1)] + [(-1, gv)], 0, tag="gate_net")

    # ------------------------------------------------------------------- cuts
    def _cuts(self) -> None:
        m = self.m
        self.scx: dict[int, int] = {}
        for j in range(0, 2 * self.N + 1):
            edge = j in (0, 2 * self.N)
            self.scx[j] = m.new_int(f"scx[{j}]", 1 if edge else 0, 1)
        for j in range(1, 2 * self.N):
            table = self.g if j % 2 == 0 else self.u
            top = [(n, v) for (h, jj, n), v in table.items() if h == "P" and jj == j]
            bot = [(n, v) for (h, jj, n), v in table.items() if h == "N" and jj == j]
            for n1, v1 in top:
                for n2, v2 in bot:
                    if n1 != n2:
                        m.add_clause([self.scx[j], ~v1, ~v2], tag=f"cut_{j}")
        if self.cfg.min_cut_width_cpp == 2:
            for k in self.slots:
                j = 2 * k
                m.add_linear([(1, self.scx[j]), (-1, self.scx[j - 2]), (-1, self.scx[j + 2])], hi=0,
                             tag=f"cutwidth_{j}")

    # ------------------------------------------------------------- flow graph
    def _flow_graph(self) -> None:
        g = self.grid
        w = self.w_total
        # Only M1 columns on the cell edge are dummies; horizontal tracks run to the edge.
        usable = [vid for vid, v in enumerate(g.vertices)
                  if v.layer in ROUTING_LAYERS and (v.layer in HORIZONTAL_LAYERS or 0 < v.col < w)]
        self.usable = set(usable)
        links: list[Link] = []
        for eid, ed in enumerate(g.edges):
            if ed.u in self.usable and ed.v in self.usable:
                links.append(Link(ed.u, ed.v, "via" if ed.via else "wire",
                                  self.cfg.wl_via_weight if ed.via else ed.length, eid))
        nid = len(g.vertices)
        sites: dict[tuple[str, int], Site] = {}
        for half in ("P", "N"):
            for j in range(1, 2 * self.N):
                sites[half, j] = Site(half, j, nid)
                nid += 1
        mp1 = self.cfg.mp[1]
        for (half, j), s in sites.items():
            if j % 2 == 0:
                cols = [(j // 2) * mp1]
            else:
                lo_c, hi_c = (j // 2) * mp1, (j // 2 + 1) * mp1
                cols = [c for c in g.columns[2] if lo_c <= c <= hi_c]
            for r in self.half_rows[half]:
                for c in cols:
                    vid = g.vertex_id(2, r, c)
                    if vid is not None and vid in self.usable:
                        links.append(Link(s.node, vid, "access", 0))
        for j in range(1, 2 * self.N):
            links.append(Link(sites["P", j].node, sites["N", j].node, "mol", 0, col=j))
        incident: list[list[int]] = [[] for _ in range(nid)]
        for lid, lk in enumerate(links):
            incident[lk.a].append(lid)
            incident[lk.b].append(lid)
        self.flow = FlowGraph(nid, usable, sites, links, incident)
        self.site_by_node = {s.node: s for s in sites.values()}

    def _site_owner(self, site: Site, net: str) -> Optional[int]:
        table = self.g if site.is_gate else self.u
        return table.get((site.half, site.col, net))

    def _position(self, term: Terminal) -> dict[int, list[int]]:
        """Flow node -> variables whose sum says the terminal sits there."""
        pos: dict[int, list[int]] = {}
        if term.role == "pin":
            return {v: [p] for v, p in self.pin_pos[term.owner].items()}
        tr = self.dev[term.owner]
        half = _half(tr.kind)
        for k in self.slots:
            for phi in (0, 1):
                yv = self.y[tr.id, k, phi]
                if term.role == "gate":
                    j = 2 * k
                elif (term.role == "source") == (phi == 0):
                    j = 2 * k - 1
                else:
                    j = 2 * k + 1
                pos.setdefault(self.flow.sites[half, j].node, []).append(yv)
        return pos

    # ---------------------------------------------------------------- routing
    def _routing(self) -> None:
        m, fl = self.m, self.flow
        self.terms = derive_terminals(self.nl)
        self.routed = [n for n in sorted(self.nl.nets) if len(self.terms[n].all) > 1]
        # pin position variables are needed before conservation rows
        self.pin_pos: dict[str, dict[int, int]] = {}
        pin_layer = 2 if self.m0_pins else 3
        for p in sorted(self.nl.pins):
            cand = [v for v in fl.vertex_nodes if self.grid.vertices[v].layer == pin_layer]
            self.pin_pos[p] = {v: m.new_bool(f"pi[{p},{v}]") for v in cand}
            m.add_eq([(1, v) for v in self.pin_pos[p].values()], 1, tag=f"pin_{p}")
        self.e: dict[tuple[str, int], int] = {}
        self.xl: dict[tuple[str, int], int] = {}  # net-level link usage (metal, access, mol)
        self.used: dict[tuple[str, int], int] = {}
        self.commodities: list[Commodity] = []
        self.allowed: dict[str, list[int]] = {}
        for net in self.routed:
            allowed = []
            for lid, lk in enumerate(fl.links):
                if lk.kind in ("wire", "via"):
                    allowed.append(lid)
                elif lk.kind == "access":
                    if self._site_owner(self.site_by_node[lk.a], net) is not None:
                        allowed.append(lid)
                else:
                    sa, sb = self.site_by_node[lk.a], self.site_by_node[lk.b]
                    if self._site_owner(sa, net) is not None and self._site_owner(sb, net) is not None:
                        allowed.append(lid)
            self.allowed[net] = allowed
            for lid in allowed:
                kind = fl.links[lid].kind
                if kind in ("wire", "via"):
                    self.e[net, lid] = m.new_bool(f"e[{net},{lid}]")
                    self.xl[net, lid] = self.e[net, lid]
                else:
                    self.xl[net, lid] = m.new_bool(f"{kind}[{net},{lid}]")
            for v in fl.vertex_nodes:
                self.used[net, v] = m.new_bool(f"used[{net},{v}]")
        for net in self.routed:
            nt = self.terms[net]
            src = self._position(nt.source)
            for sink in nt.sinks:
                com = Commodity(net, sink)
                for lid in self.allowed[net]:
                    for d in (0, 1):
                        com.f[lid, d] = m.new_bool(f"f[{net}>{sink},{lid},{d}]")
                self.commodities.append(com)
                snk = self._position(sink)
                self._conservation(com, src, snk)
                self._flow_links(com)
        # vertex exclusivity
        for v in fl.vertex_nodes:
            owners = [self.used[n, v] for n in self.routed]
            if len(owners) > 1:
                m.add_atmost(owners, 1, tag=f"exclusive_{v}")

    def _conservation(self, com: Commodity, src: dict[int, list[int]], snk: dict[int, list[int]]) -> None:
        m, fl = self.m, self.flow
        nodes: dict[int, list[tuple[int, int]]] = {}
        for (lid, d), fv in com.f.items():
            lk = fl.links[lid]
            tail, head = (lk.a, lk.b) if d == 0 else (lk.b, lk.a)
            nodes.setdefault(tail, []).append((1, fv))
            nodes.setdefault(head, []).append((-1, fv))
        for node in set(nodes) | set(src) | set(snk):
            terms = list(nodes.get(node, []))
            terms += [(-1, v) for v in src.get(node, [])]
            terms += [(1, v) for v in snk.get(node, [])]
            m.add_eq(terms, 0, tag=f"flow_{com.net}")

    def _flow_links(self, com: Commodity) -> None:
        m, net = self.m, com.net
        for lid in self.allowed[net]:
            m.add_linear([(1, com.f[lid, 0]), (1, com.f[lid, 1]), (-1, self.xl[net, lid])], hi=0,
                         tag="flow_link")

    def _link_rules(self) -> None:
        """Access links need an owned site and consume the M0 vertex; MOL links need the cut off."""
        m, fl = self.m, self.flow
        for (net, lid), xv in self.xl.items():
            lk = fl.links[lid]
            if lk.kind == "access":
                m.add_implies([xv], self._site_owner(self.site_by_node[lk.a], net), tag="access_site")
                m.add_implies([xv], self.used[net, lk.b], tag="access_vertex")
            elif lk.kind == "mol":
                for node in (lk.a, lk.b):
                    m.add_implies([xv], self._site_owner(self.site_by_node[node], net), tag="mol_site")
                m.add_implies([xv], ~self.scx[lk.col], tag="mol_cut")

    # --------------------------------------------------------------- geometry
    def _geometry(self) -> None:
        """Exact used/metal bookkeeping and segment-end (geometric) variables."""
        m, fl, g = self.m, self.flow, self.grid
        self._link_rules()
        for net in self.routed:
            for v in fl.vertex_nodes:
                uv = self.used[net, v]
                sources = [self.xl[net, lid] for lid in fl.incident[v] if (net, lid) in self.xl]
                if net in self.pin_pos and v in self.pin_pos[net]:
                    sources.append(self.pin_pos[net][v])
                for s in sources:
                    m.add_implies([s], uv, tag="used")
                m.add_implies([uv], sources, tag="used")
        self.U: dict[int, int] = {}
        for v in fl.vertex_nodes:
            owners = [self.used[n, v] for n in self.routed]
            Uv = m.new_bool(f"U[{v}]")
            self.U[v] = Uv
            m.add_eq([(1, o) for o in owners] + [(-1, Uv)], 0, tag="U")
        self.M: dict[int, int] = {}
        for lid, lk in enumerate(fl.links):
            if lk.kind not in ("wire", "via"):
                continue
            Mv = m.new_bool(f"M[{lid}]")
            self.M[lid] = Mv
            m.add_eq([(1, self.e[n, lid]) for n in self.routed] + [(-1, Mv)], 0, tag="M")
            for n in self.routed:
                ev = self.e[n, lid]
                m.add_implies([ev], self.used[n, lk.a], tag="metal_end")
                m.add_implies([ev], self.used[n, lk.b], tag="metal_end")
        self.link_of_edge = {lk.grid_edge: lid for lid, lk in enumerate(fl.links) if lk.grid_edge is not None}
        self.gv: dict[tuple[int, str], int] = {}
        for v in fl.vertex_nodes:
            vert = g.vertices[v]
            dirs = ("L", "R") if vert.layer in HORIZONTAL_LAYERS else ("F", "B")
            for dname in dirs:
                nb = g.neighbor(v, dname)
                lid = None
                if nb is not None and nb in self.usable:
                    lid = self.link_of_edge.get(g.edge_between(v, nb))
                gvar = m.new_bool(f"gv[{v},{dname}]")
                self.gv[v, dname] = gvar
                if lid is None:
                    m.add_eq([(1, gvar), (-1, self.U[v])], 0, tag="gv")
                else:
                    mv = self.M[lid]
                    m.add_implies([gvar], self.U[v], tag="gv")
                    m.add_implies([gvar], ~mv, tag="gv")
                    m.add_implies([self.U[v], ~mv], gvar, tag="gv")

    # ---------------------------------------------------------- design rules
    def _design_rules(self) -> None:
        m, g, fl = self.m, self.grid, self.flow
        by_track: dict[tuple[int, int], list[int]] = {}
        for v in fl.vertex_nodes:
            vt = g.vertices[v]
            key = (vt.layer, vt.row if vt.layer in HORIZONTAL_LAYERS else vt.col)
            by_track.setdefault(key, []).append(v)

        def coord(v: int) -> int:
            vt = g.vertices[v]
            return vt.col if vt.layer in HORIZONTAL_LAYERS else vt.row

        for (layer, track), verts in sorted(by_track.items()):
            verts.sort(key=coord)
            rules = self.cfg.dr[layer]
            lo_d, hi_d = ("L", "R") if layer in HORIZONTAL_LAYERS else ("F", "B")
            for i, v1 in enumerate(verts):
                for v2 in verts[i:]:
                    dist = coord(v2) - coord(v1)
                    if dist < rules.mar_length:
                        m.add_atmost([self.gv[v1, lo_d], self.gv[v2, hi_d]], 1, tag=f"mar_L{layer}")
                    if 0 < dist < rules.eol_spacing:
                        m.add_atmost([self.gv[v1, hi_d], self.gv[v2, lo_d]], 1, tag=f"eol_L{layer}")
        # step height: same-type ends on adjacent tracks closer than shr
        for layer in ROUTING_LAYERS:
            rules = self.cfg.dr[layer]
            tracks = sorted(t for (ly, t) in by_track if ly == layer)
            dnames = ("L", "R") if layer in HORIZONTAL_LAYERS else ("F", "B")
            pitch = self.cfg.mp[2] if layer in HORIZONTAL_LAYERS else self.cfg.mp[3]
            for t1, t2 in zip(tracks, tracks[1:]):
                if rules.shr_distance > 0:
                    for v1 in by_track[layer, t1]:
                        for v2 in by_track[layer, t2]:
                            if 0 < abs(coord(v1) - coord(v2)) < rules.shr_distance:
                                for dn in dnames:
                                    m.add_atmost([self.gv[v1, dn], self.gv[v2, dn]], 1, tag=f"shr_L{layer}")
                run = prl_threshold(rules.prl_spacing_table, t2 - t1 if t2 - t1 else pitch)
                if run is not None:
                    self._prl(layer, by_track[layer, t1], by_track[layer, t2], run, coord)
        # via separation
        vias: dict[int, list[int]] = {}
        for lid, lk in enumerate(fl.links):
            if lk.kind == "via":
                vias.setdefault(min(g.vertices[lk.a].layer, g.vertices[lk.b].layer), []).append(lid)
        for low, lids in vias.items():
            rad = self.cfg.dr[low].via_separation_radius
            if rad <= 0:
                continue
            for i, l1 in enumerate(lids):
                p1 = g.vertices[fl.links[l1].a]
                for l2 in lids[i + 1:]:
                    p2 = g.vertices[fl.links[l2].a]
                    if (p1.row - p2.row) ** 2 + (p1.col - p2.col) ** 2 < rad * rad:
                        m.add_atmost([self.M[l1], self.M[l2]], 1, tag=f"via_sep_V{low}")

    def _prl(self, layer: int, t1: list[int], t2: list[int], run: int, coord) -> None:
        """Forbid parallel metal of length >= run on two adjacent tracks."""
        g = self.grid

        def track_links(verts: list[int]) -> list[tuple[int, int, int]]:
            out = []
            for a, b in zip(verts, verts[1:]):
                lid = self.link_of_edge.get(g.edge_between(a, b))
                if lid is not None:
                    out.append((coord(a), coord(b), lid))
            return out

        l1, l2 = track_links(t1), track_links(t2)
        starts = sorted({c for c, _, _ in l1} & {c for c, _, _ in l2})
        for s in starts:
            end = s + run
            w1 = [lid for a, b, lid in l1 if a >= s and b <= end]
            w2 = [lid for a, b, lid in l2 if a >= s and b <= end]
            cov1 = sum(b - a for a, b, _ in l1 if a >= s and b <= end)
            if cov1 < run or not w1 or not w2:
                continue
            self.m.add_clause([~self.M[lid] for lid in w1 + w2], tag=f"prl_L{layer}")

    # ------------------------------------------------------------------- pins
    def _pins(self) -> None:
        m, g, fl = self.m, self.grid, self.flow
        self.pin_ext: dict[str, dict[int, int]] = {}
        self.pin_open: dict[str, dict[int, int]] = {}
        pins = sorted(self.nl.pins)
        if not self.m0_pins or not pins:
            return
        rows = g.rows
        if self.opt.pin_separation and len(pins) > 1:
            cap = 1 if len(pins) <= len(rows) else math.ceil(len(pins) / len(rows))
            for r in rows:
                lits = [pv for p in pins for v, pv in self.pin_pos[p].items() if g.vertices[v].row == r]
                m.add_atmost(lits, cap, tag=f"pin_sep_{r}")
        for p in pins:
            net = p
            pos = self.pin_pos[p]
            q = {v: m.new_bool(f"q[{p},{v}]") for v in pos}
            self.pin_ext[p] = q
            row_pi: dict[int, list[int]] = {}
            for v, pv in pos.items():
                row_pi.setdefault(g.vertices[v].row, []).append(pv)
            for v, qv in q.items():
                m.add_implies([pos[v]], qv, tag="pin_ext")
                m.add_implies([qv], row_pi[g.vertices[v].row], tag="pin_row")
                if net in self.routed:
                    m.add_implies([qv], self.used[net, v], tag="pin_metal")
            pe_terms = []
            for lid, lk in enumerate(fl.links):
                if lk.kind == "wire" and lk.a in q and lk.b in q:
                    pe = m.new_bool(f"pe[{p},{lid}]")
                    m.add_implies([pe], q[lk.a], tag="pin_ext")
                    m.add_implies([pe], q[lk.b], tag="pin_ext")
                    if net in self.routed:
                        m.add_implies([pe], self.e[net, lid], tag="pin_ext")
                    pe_terms.append((-1, pe))
            m.add_eq([(1, qv) for qv in q.values()] + pe_terms, 1, tag=f"pin_interval_{p}")
            if self.theta > 0:
                opens = {}
                m1_cols = sorted({g.vertices[v].col for v in fl.vertex_nodes if g.vertices[v].layer == 3})
                if self.theta > len(m1_cols):
                    raise EncodingError(f"minimum pin opening {self.theta} exceeds the {len(m1_cols)} usable "
                                        f"M1 tracks of a {self.w_total} nm cell; the model would be UNSAT")
                for c in m1_cols:
                    ov = m.new_bool(f"open[{p},{c}]")
                    opens[c] = ov
                    over = [qv for v, qv in q.items() if g.vertices[v].col == c]
                    m.add_implies([ov], over, tag="mpo")
                    for other in self.routed:
                        if other == net:
                            continue
                        for v in fl.vertex_nodes:
                            vt = g.vertices[v]
                            if vt.layer == 3 and vt.col == c:
                                m.add_implies([ov], ~self.used[other, v], tag="mpo_block")
                self.pin_open[p] = opens
                m.add_linear([(1, ov) for ov in opens.values()], lo=self.theta, tag=f"mpo_{p}")

    # ------------------------------------------------------------ acceleration
    def _accel(self) -> None:
        from ..accel.constraints import cluster_constraints, itp_constraints

        self.cluster_bounds = cluster_constraints(self.m, self.opt.clusters, self.x, self.kind, self.slots)
        if self.opt.itp:
            itp_constraints(self.m, self.nl.transistors, self.x, self.opt.clusters)

    # -------------------------------------------------------------- objective
    def _objective(self) -> None:
        m, cfg, fl, g = self.m, self.cfg, self.flow, self.grid
        lam = cfg.weights
        n_max = max(self.nl.width_sum(Kind.PMOS), self.nl.width_sum(Kind.NMOS))
        self.a: dict[int, int] = {}
        for k in self.slots:
            self.a[k] = m.new_int(f"a[{k}]", 1 if k <= n_max else 0, 1)
        for k in self.slots:
            nxt = [(-1, self.a[k + 1])] if k + 1 in self.a else []
            for half in ("P", "N"):
                m.add_implies([self.occ[half, k]], self.a[k], tag="cw")
            if nxt:
                m.add_implies([self.a[k + 1]], self.a[k], tag="cw")
            m.add_linear([(1, self.a[k])] + nxt + [(-1, self.occ["P", k]), (-1, self.occ["N", k])], hi=0, tag="cw")
        terms: dict[str, list[tuple[int, int]]] = {}
        consts: dict[str, int] = {"CW": 1}
        terms["CW"] = [(1, v) for v in self.a.values()]
        wl = []
        for (net, lid), ev in self.e.items():
            wl.append((fl.links[lid].cost, ev))
        terms["WL"] = wl
        self.abut: dict[tuple[str, int], int] = {}
        sgd = []
        for half in ("P", "N"):
            for k in self.slots:
                if k + 1 in self.slots:
                    ab = m.new_bool(f"abut[{half},{2 * k + 1}]")
                    self.abut[half, 2 * k + 1] = ab
                    m.add_and(ab, [self.occ[half, k], self.occ[half, k + 1]], tag="sgd")
                    sgd.append((1, ab))
        self.merge: dict[tuple[int, str], int] = {}
        for j in range(1, 2 * self.N):
            table = self.g if j % 2 == 0 else self.u
            for (h, jj, net), top in table.items():
                if h != "P" or jj != j:
                    continue
                bot = table.get(("N", j, net))
                if bot is None:
                    continue
                mm = m.new_bool(f"merge[{j},{net}]")
                self.merge[j, net] = mm
                m.add_and(mm, [top, bot, ~self.scx[j]], tag="sgd")
                sgd.append((1, mm))
        terms["SGD"] = sgd
        dbx = []
        dbx_const = 0
        for half in ("P", "N"):
            for k in self.slots:
                dbx_const += 2 * k
                dbx.append((-2 * k, self.occ[half, k]))
        terms["DBX"] = dbx
        consts["DBX"] = dbx_const
        self.m2rows: dict[int, int] = {}
        m2 = []
        for r in g.rows:
            on_row = [self.U[v] for v in fl.vertex_nodes if g.vertices[v].layer == 4 and g.vertices[v].row == r]
            if not on_row:
                continue
            rv = m.new_bool(f"m2row[{r}]")
            self.m2rows[r] = rv
            m.add_or(rv, on_row, tag="m2")
            m2.append((1, rv))
        terms["M2"] = m2
        weights = {"CW": lam.lambda0, "WL": lam.lambda1, "SGD": -lam.lambda2, "DBX": -lam.lambda3, "M2": lam.lambda4}
        obj: list[tuple[int, int]] = []
        offset = 0
        for name, wgt in weights.items():
            obj += [(wgt * c, v) for c, v in terms[name]]
            offset += wgt * consts.get(name, 0)
        m.minimize(obj, offset)
        self._branch_order()
        self.enc = Encoding(
            model=m, cfg=cfg, netlist=self.nl, grid=g, flow=fl, w_total=self.w_total, n_pitch=self.N,
            slots=self.slots, devices=[t.id for t in self.nl.transistors], device_kind=self.kind,
            y=self.y, x=self.x, occ=self.occ, u=self.u, g=self.g, scx=self.scx, nets=sorted(self.nl.nets),
            routed_nets=self.routed, terminals=self.terms, commodities=self.commodities, e=self.e, xl=self.xl,
            used=self.used, U=self.U, M=self.M, gv=self.gv, pin_pos=self.pin_pos, pin_ext=self.pin_ext,
            pin_open=self.pin_open, a=self.a, abut=self.abut, merge=self.merge, m2rows=self.m2rows,
            m0_pins=self.m0_pins, theta=self.theta, objective_terms=terms, objective_consts=consts,
            half_rows=self.half_rows)

    def _branch_order(self) -> None:
        order = [self.y[d, k, p] for k in self.slots for d in sorted(self.x) for p in (0, 1)]
        self.m.groups["branch_order"] = order


def prl_threshold(table: Sequence[tuple[int, int]], pitch: int) -> Optional[int]:
    """Smallest parallel-run length whose required spacing exceeds the track pitch."""
    for run, spacing in table:
        if spacing > pitch:
            return run
    return None


def encode(netlist: Netlist, cfg: TechConfig, options: EncodeOptions | None = None) -> Encoding:
    return Encoder(netlist, cfg, options).build()
