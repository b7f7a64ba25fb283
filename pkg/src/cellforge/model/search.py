"""Encoder-supplied search guidance for the reference backend.

Search proceeds in phases: placement slot by slot from the left, then per
net (1) grow the net's link set from its source toward the nearest
unconnected terminal, (2) pick the pin vertex, (3) decide extensions of the
net's metal along its tracks (what minimum-area and end-of-line rules can
ask for), (4) route each commodity along the chosen links. Links left
undecided at the end are switched off: they would be floating metal or
unused contacts, which never lower the objective or repair a rule.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from typing import Optional

from .encode import Encoding

INF = math.inf


def _positions(enc: Encoding, term) -> dict[int, list[int]]:
    if term.role == "pin":
        return {v: [p] for v, p in enc.pin_pos[term.owner].items()}
    tr = enc.netlist.device[term.owner]
    half = "P" if tr.kind.value == "pmos" else "N"
    pos: dict[int, list[int]] = {}
    for k in enc.slots:
        for phi in (0, 1):
            yv = enc.y[tr.id, k, phi]
            if term.role == "gate":
                j = 2 * k
            elif (term.role == "source") == (phi == 0):
                j = 2 * k - 1
            else:
                j = 2 * k + 1
            pos.setdefault(enc.flow.sites[half, j].node, []).append(yv)
    return pos


def _fixed_node(pos: dict[int, list[int]], lo: list[int]) -> Optional[int]:
    for node, vs in pos.items():
        for v in vs:
            if lo[v] == 1:
                return node
    return None


class _Com:
    __slots__ = ("src", "snk", "arcs", "fvars")

    def __init__(self) -> None:
        self.src: dict[int, list[int]] = {}
        self.snk: dict[int, list[int]] = {}
        self.arcs: dict[int, list[tuple[int, int, int]]] = {}  # node -> (f var, head, link var)
        self.fvars: list[int] = []


class _Track:
    __slots__ = ("verts", "coords", "edges", "mar")

    def __init__(self, verts, coords, edges, mar):
        self.verts = verts  # vertex ids in coordinate order
        self.coords = coords
        self.edges = edges  # metal var between verts[i] and verts[i+1], or -1
        self.mar = mar


class _Net:
    __slots__ = ("name", "root", "sinks", "pin", "adj", "wires", "used", "coms", "links", "tracks",
                 "pin_minseg")

    def __init__(self, name: str) -> None:
        self.name = name
        self.root: dict[int, list[int]] = {}
        self.sinks: list[dict[int, list[int]]] = []
        self.pin: dict[int, int] = {}  # L2 vertex -> pi var (empty if the net has no pin)
        self.adj: dict[int, list[tuple[int, int, int]]] = {}  # node -> (link var, other node, cost)
        self.wires: dict[int, list[int]] = {}  # vertex -> incident metal link vars
        self.used: dict[int, int] = {}
        self.coms: list[_Com] = []
        self.links: list[int] = []
        self.tracks: list[_Track] = []
        self.pin_minseg = 0


def _tracks(enc: Encoding, net: str) -> list[_Track]:
    from ..tech import HORIZONTAL_LAYERS

    g, fl = enc.grid, enc.flow
    groups: dict[tuple[int, int], list[int]] = {}
    for v in fl.vertex_nodes:
        vt = g.vertices[v]
        horiz = vt.layer in HORIZONTAL_LAYERS
        groups.setdefault((vt.layer, vt.row if horiz else vt.col), []).append(v)
    link_of = {}
    for lid, lk in enumerate(fl.links):
        if lk.kind == "wire":
            link_of[frozenset((lk.a, lk.b))] = lid
    out = []
    for (layer, _), verts in sorted(groups.items()):
        mar = enc.cfg.dr[layer].mar_length
        if mar <= 0:
            continue
        horiz = layer in HORIZONTAL_LAYERS
        verts.sort(key=lambda v: g.vertices[v].col if horiz else g.vertices[v].row)
        coords = [g.vertices[v].col if horiz else g.vertices[v].row for v in verts]
        edges = []
        for a, b in zip(verts, verts[1:]):
            lid = link_of.get(frozenset((a, b)))
            edges.append(enc.e[net, lid] if lid is not None and (net, lid) in enc.e else -1)
        out.append(_Track(verts, coords, edges, mar))
    return out


def min_segment(coords: list[int], mar: int) -> float:
    """Shortest run of consecutive track positions reaching ``mar``."""
    best = INF
    for i in range(len(coords)):
        for j in range(i, len(coords)):
            if coords[j] - coords[i] >= mar:
                best = min(best, coords[j] - coords[i])
                break
    return best


def _mar_extra(n: "_Net", lo: list[int], hi: list[int]) -> float:
    """Metal still needed so every used run reaches its minimum length."""
    total = 0.0
    for tr in n.tracks:
        verts, coords, edges, used = tr.verts, tr.coords, tr.edges, n.used
        worst = 0.0
        i, k = 0, len(verts)
        while i < k:
            j = i
            while j < k - 1 and edges[j] >= 0 and lo[edges[j]] == 1:
                j += 1
            if any(lo[used[verts[t]]] == 1 for t in range(i, j + 1)):
                length = coords[j] - coords[i]
                if length < tr.mar:
                    need = INF
                    # extend left by a edges and right by b edges over still-open metal
                    left = [0]
                    t = i
                    while t > 0 and edges[t - 1] >= 0 and hi[edges[t - 1]] == 1:
                        t -= 1
                        left.append(coords[i] - coords[t])
                    right = [0]
                    t = j
                    while t < k - 1 and edges[t] >= 0 and hi[edges[t]] == 1:
                        t += 1
                        right.append(coords[t] - coords[j])
                    for a in left:
                        for b in right:
                            if length + a + b >= tr.mar and a + b < need:
                                need = a + b
                    if need == INF:
                        return INF
                    worst = max(worst, need)
            i = j + 1
        total += worst
    return total


def compile_nets(enc: Encoding) -> list[_Net]:
    fl = enc.flow
    nets = []
    for name in enc.routed_nets:
        n = _Net(name)
        nt = enc.terminals[name]
        n.root = _positions(enc, nt.source)
        for t in nt.sinks:
            if t.role == "pin":
                n.pin = dict(enc.pin_pos[t.owner])
            else:
                n.sinks.append(_positions(enc, t))
        for (net, lid), xv in enc.xl.items():
            if net != name:
                continue
            lk = fl.links[lid]
            n.adj.setdefault(lk.a, []).append((xv, lk.b, lk.cost))
            n.adj.setdefault(lk.b, []).append((xv, lk.a, lk.cost))
            n.links.append(xv)
            if lk.kind in ("wire", "via"):
                n.wires.setdefault(lk.a, []).append(xv)
                n.wires.setdefault(lk.b, []).append(xv)
        n.used = {v: enc.used[name, v] for v in fl.vertex_nodes}
        n.tracks = _tracks(enc, name)
        if n.pin:
            layer = enc.grid.vertices[next(iter(n.pin))].layer
            n.pin_minseg = min((min_segment(t.coords, t.mar) for t in n.tracks
                                if enc.grid.vertices[t.verts[0]].layer == layer), default=0)
        for com in enc.commodities:
            if com.net != name:
                continue
            c = _Com()
            c.src = n.root
            c.snk = _positions(enc, com.sink)
            for (lid, d), fv in sorted(com.f.items()):
                lk = fl.links[lid]
                tail, head = (lk.a, lk.b) if d == 0 else (lk.b, lk.a)
                c.arcs.setdefault(tail, []).append((fv, head, enc.xl[name, lid]))
                c.fvars.append(fv)
            n.coms.append(c)
        nets.append(n)
    nets.sort(key=lambda n: (-(len(n.sinks) + bool(n.pin)), n.name))
    return nets


def _component(n: _Net, root: int, lo: list[int]) -> set[int]:
    comp = {root}
    todo = [root]
    while todo:
        x = todo.pop()
        for xv, y, _ in n.adj.get(x, ()):
            if lo[xv] == 1 and y not in comp:
                comp.add(y)
                todo.append(y)
    return comp


def _dijkstra(n: _Net, comp: set[int], lo: list[int], hi: list[int]):
    dist: dict[int, float] = dict.fromkeys(comp, 0)
    pred: dict[int, tuple[int, int]] = {}
    heap = [(0, x) for x in comp]
    while heap:
        d, x = heapq.heappop(heap)
        if d > dist[x]:
            continue
        for xv, y, cost in n.adj.get(x, ()):
            if hi[xv] == 0:
                continue
            nd = d + (0 if lo[xv] == 1 else cost)
            if nd < dist.get(y, INF):
                dist[y] = nd
                pred[y] = (x, xv)
                heapq.heappush(heap, (nd, y))
    return dist, pred


def _open_terminals(n: _Net, comp: set[int], lo: list[int], hi: list[int]) -> Optional[list[set[int]]]:
    """Target node sets of terminals not yet connected; None if a terminal is unplaced."""
    out: list[set[int]] = []
    for pos in n.sinks:
        t = _fixed_node(pos, lo)
        if t is None:
            return None
        if t not in comp:
            out.append({t})
    if n.pin:
        fixed = [v for v, p in n.pin.items() if lo[p] == 1]
        if fixed:
            if fixed[0] not in comp:
                out.append({fixed[0]})
        elif not any(hi[p] == 1 for v, p in n.pin.items() if v in comp):
            out.append({v for v, p in n.pin.items() if hi[p] == 1})
    return out


def net_extra_bound(n: _Net, lo: list[int], hi: list[int]) -> float:
    """Cheapest additional link cost the net must still buy (0 if unknown)."""
    area = _mar_extra(n, lo, hi)
    if area == INF:
        return INF
    root = _fixed_node(n.root, lo)
    if root is None:
        return area
    comp = _component(n, root, lo)
    targets = _open_terminals(n, comp, lo, hi)
    if targets is None:
        return area
    if n.pin and not any(lo[p] == 1 for p in n.pin.values()) and not any(
            lo[n.used[v]] == 1 for v in n.pin):
        # the pin will need a fresh segment on its layer
        area = max(area, n.pin_minseg)
    if not targets:
        return area
    dist, _ = _dijkstra(n, comp, lo, hi)
    worst = 0.0
    for tset in targets:
        d = min((dist.get(t, INF) for t in tset), default=INF)
        if d > worst:
            worst = d
    return max(worst, area)


class LayoutStrategy:
    def __init__(self, enc: Encoding):
        self.enc = enc
        self.nets = compile_nets(enc)
        self.place = []
        for k in enc.slots:
            for half in ("P", "N"):
                cands = [enc.y[d, k, p] for d in enc.devices
                         if ("P" if enc.device_kind[d].value == "pmos" else "N") == half for p in (0, 1)]
                self.place.append(cands)

    def randomize(self, rng) -> None:
        """Reshuffle net and placement order (used between restarts)."""
        rng.shuffle(self.nets)
        for cands in self.place:
            if rng.random() < 0.5:
                cands.reverse()

    def choose(self, eng) -> Optional[tuple[int, list[int]]]:
        lo, hi = eng.lo, eng.hi
        for cands in self.place:
            if any(lo[v] == 1 for v in cands):
                continue
            for v in cands:
                if hi[v] == 1:
                    return v, [1, 0]
        for n in self.nets:
            d = self._net(n, lo, hi)
            if d is not None:
                return d
        rest = [(xv, 0) for n in self.nets for xv in n.links if lo[xv] != hi[xv]]
        return (None, [rest]) if rest else None

    def _net(self, n: _Net, lo: list[int], hi: list[int]) -> Optional[tuple[int, list[int]]]:
        root = _fixed_node(n.root, lo)
        if root is None:
            return None
        comp = _component(n, root, lo)
        targets = _open_terminals(n, comp, lo, hi)
        if targets is None:
            return None
        if targets:
            dist, pred = _dijkstra(n, comp, lo, hi)
            best = None
            for tset in targets:
                for t in tset:
                    d = dist.get(t, INF)
                    if d < INF and (best is None or (d, t) < best):
                        best = (d, t)
            if best is None:
                return None
            x = best[1]
            step = None
            while x not in comp:
                prev, xv = pred[x]
                if lo[xv] != hi[xv]:
                    step = xv
                x = prev
            if step is not None:
                return step, [1, 0]
            return None
        if n.pin:
            for v in sorted(comp):
                p = n.pin.get(v)
                if p is not None and lo[p] != hi[p]:
                    return p, [1, 0]
        for v in sorted(comp):
            if v in n.used and lo[n.used[v]] == 1:
                for xv in n.wires.get(v, ()):
                    if lo[xv] != hi[xv]:
                        return xv, [0, 1]
        for c in n.coms:
            d = self._flow(c, lo, hi)
            if d is not None:
                return d
        return None

    @staticmethod
    def _flow(c: _Com, lo: list[int], hi: list[int]) -> Optional[tuple[int, list[int]]]:
        if all(lo[f] == hi[f] for f in c.fvars):
            return None
        s = _fixed_node(c.src, lo)
        t = _fixed_node(c.snk, lo)
        if s is None or t is None:
            return None
        pred: dict[int, tuple[int, int]] = {s: (-1, -1)}
        q = deque([s])
        while q and t not in pred:
            x = q.popleft()
            for fv, y, xv in c.arcs.get(x, ()):
                if hi[fv] == 1 and lo[xv] == 1 and y not in pred:
                    pred[y] = (x, fv)
                    q.append(y)
        if t in pred:
            path = set()
            x = t
            while x != s:
                x, fv = pred[x]
                path.add(fv)
            batch = [(fv, 1 if fv in path else 0) for fv in c.fvars if lo[fv] != hi[fv]]
            return (None, [batch]) if batch else None
        for fv in c.fvars:
            if lo[fv] != hi[fv]:
                return fv, [0, 1]
        return None


class RoutingBound:
    """Objective floor plus, per net, the dearest terminal still to connect."""

    def __init__(self, enc: Encoding):
        self.nets = compile_nets(enc)
        self.lam = enc.cfg.weights.lambda1

    def __call__(self, eng) -> float:
        floor = eng.objective_floor()
        if self.lam == 0:
            return floor
        lo, hi = eng.lo, eng.hi
        extra = 0.0
        for n in self.nets:
            b = net_extra_bound(n, lo, hi)
            if b == INF:
                return INF
            extra += b
        return floor + self.lam * extra


def strategy_factory(enc: Encoding):
    return lambda: LayoutStrategy(enc)
