"""Half-perimeter routing lower bound published during search.

Each terminal is a box: the span of routing vertices its site can reach
through a contact. Sites that can still merge over a middle-of-line link
count as one terminal whose box covers both. Pins are left out since they
may land anywhere on their layer.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence

from ..model.encode import Encoding

Box = tuple[int, int, int, int]  # x_lo, y_lo, x_hi, y_hi


def hpwl(points: Iterable[tuple[float, float]]) -> float:
    pts = list(points)
    if len(pts) < 2:
        return 0
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    return (max(xs) - min(xs)) + (max(ys) - min(ys))


def box_hpwl(boxes: Sequence[Box]) -> float:
    """Shortest half perimeter of any point set picking one point per box."""
    if len(boxes) < 2:
        return 0
    dx = max(b[0] for b in boxes) - min(b[2] for b in boxes)
    dy = max(b[1] for b in boxes) - min(b[3] for b in boxes)
    return max(0, dx) + max(0, dy)


class RlbtBound:
    """Bound provider: objective floor raised by per-net HPWL once a net's
    terminals are placed."""

    def __init__(self, enc: Encoding):
        self.enc = enc
        fl, g = enc.flow, enc.grid
        self.lam = enc.cfg.weights.lambda1
        self.site_box: dict[int, Box] = {}
        site_nodes = {s.node for s in fl.sites.values()}
        for lk in fl.links:
            if lk.kind != "access":
                continue
            site, v = (lk.a, lk.b) if lk.a in site_nodes else (lk.b, lk.a)
            vt = g.vertices[v]
            b = self.site_box.get(site)
            self.site_box[site] = (vt.col, vt.row, vt.col, vt.row) if b is None else (
                min(b[0], vt.col), min(b[1], vt.row), max(b[2], vt.col), max(b[3], vt.row))
        self.mol: dict[int, list[tuple[int, int]]] = {}  # site -> (other site, scx var)
        for lk in fl.links:
            if lk.kind == "mol":
                sv = enc.scx[lk.col]
                self.mol.setdefault(lk.a, []).append((lk.b, sv))
                self.mol.setdefault(lk.b, []).append((lk.a, sv))
        self.terms: dict[str, list[dict[int, list[int]]]] = {}
        self.metal: dict[str, list[tuple[int, int]]] = {}
        from ..model.search import _positions

        for net in enc.routed_nets:
            nt = enc.terminals[net]
            self.terms[net] = [_positions(enc, t) for t in nt.all if t.role != "pin"]
            self.metal[net] = [(fl.links[lid].cost, v) for (n, lid), v in enc.e.items() if n == net]

    def _sites(self, net: str, lo: Sequence[int]) -> Optional[list[int]]:
        out = []
        for pos in self.terms[net]:
            node = next((nd for nd, vs in pos.items() if any(lo[v] == 1 for v in vs)), None)
            if node is None:
                return None
            out.append(node)
        return out

    def net_hpwl(self, net: str, lo: Sequence[int], hi: Sequence[int]) -> float:
        sites = self._sites(net, lo)
        if not sites:
            return 0
        # group sites that may still share a middle-of-line connection
        parent = {s: s for s in sites}

        def find(s: int) -> int:
            while parent[s] != s:
                parent[s] = parent[parent[s]]
                s = parent[s]
            return s

        for s in sites:
            for t, sv in self.mol.get(s, ()):
                if t in parent and lo[sv] == 0:
                    parent[find(s)] = find(t)
        groups: dict[int, Box] = {}
        for s in sites:
            r, b = find(s), self.site_box[s]
            c = groups.get(r)
            groups[r] = b if c is None else (min(c[0], b[0]), min(c[1], b[1]), max(c[2], b[2]), max(c[3], b[3]))
        return box_hpwl(list(groups.values()))

    def total(self, values: Sequence[int]) -> float:
        """Sum of per-net HPWL for a complete assignment."""
        return sum(self.net_hpwl(n, values, values) for n in self.terms)

    def __call__(self, eng) -> float:
        floor = eng.objective_floor()
        if self.lam == 0:
            return floor
        lo, hi = eng.lo, eng.hi
        extra = 0.0
        for net in self.terms:
            h = self.net_hpwl(net, lo, hi)
            if h <= 0:
                continue
            committed = sum(c for c, v in self.metal[net] if lo[v] == 1)
            if h > committed:
                extra += h - committed
        return floor + self.lam * extra
