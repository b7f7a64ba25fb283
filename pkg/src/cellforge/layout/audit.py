"""Geometric design-rule and connectivity audit of an extracted layout.

The audit works from shapes alone: track columns are rebuilt from the
layout header and rules from the technology, never from the constraint
model, so it can catch encoding mistakes as well as corrupted files.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from ..tech import TechConfig
from .types import HORIZONTAL, Layout, Segment


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    where: tuple = ()

    def __str__(self) -> str:
        return f"{self.kind}: {self.message} at {self.where}"


@dataclass
class AuditReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for v in self.violations:
            out[v.kind] += 1
        return dict(out)

    def add(self, kind: str, message: str, *where) -> None:
        self.violations.append(Violation(kind, message, tuple(where)))


def track_columns(lay: Layout) -> dict[int, tuple[int, ...]]:
    w = lay.w_total
    c1 = tuple(range(lay.offset[0], w + 1, lay.pitch[0]))
    c3 = tuple(range(lay.offset[2], w + 1, lay.pitch[2]))
    both = tuple(sorted(set(c1) | set(c3)))
    return {1: c1, 2: both, 3: c3, 4: c3}


def _on_grid(lay: Layout, cols, layer: int, x: int, y: int) -> bool:
    if layer not in (2, 3, 4) or y not in lay.rows or x not in cols[layer]:
        return False
    return layer != 3 or 0 < x < lay.w_total


def _prl_run(table, spacing: int) -> Optional[int]:
    for run, need in table:
        if need > spacing:
            return run
    return None


def audit(lay: Layout, cfg: TechConfig, pin_separation: bool = True, theta: Optional[int] = None) -> AuditReport:
    rep = AuditReport()
    cols = track_columns(lay)
    theta = cfg.theta if theta is None else theta
    _placement(lay, rep)
    _cuts(lay, cfg, rep)
    by_track: dict[tuple[int, int], list[Segment]] = defaultdict(list)
    for s in lay.segments:
        by_track[s.layer, s.track].append(s)
        if s.start > s.end:
            rep.add("shape", "reversed segment", s)
        for x, y in (s.point(s.start), s.point(s.end)):
            if not _on_grid(lay, cols, s.layer, x, y):
                rep.add("offgrid", f"segment end off the routing grid on L{s.layer}", s.net, x, y)
    for v in lay.vias:
        if not (_on_grid(lay, cols, v.lower, v.x, v.y) and _on_grid(lay, cols, v.lower + 1, v.x, v.y)):
            rep.add("offgrid", f"via V{v.lower} off the routing grid", v.net, v.x, v.y)
    for t, segs in by_track.items():
        segs.sort(key=lambda s: (s.start, s.end))
        _track_rules(t, segs, cfg, rep)
    _adjacent_track_rules(by_track, cfg, rep)
    _via_separation(lay, cfg, rep)
    _pins(lay, cfg, cols, rep, pin_separation, theta)
    _connectivity(lay, cols, rep)
    return rep


def _placement(lay: Layout, rep: AuditReport) -> None:
    slots: dict[tuple[str, int], str] = {}
    for d in lay.devices:
        if not 1 <= d.slot < lay.n_pitch:
            rep.add("placement", f"device {d.id} outside the canvas", d.slot)
        if (d.half, d.slot) in slots:
            rep.add("placement", f"devices {slots[d.half, d.slot]} and {d.id} share a slot", d.half, d.slot)
        slots[d.half, d.slot] = d.id
    ends: dict[tuple[str, int], tuple[str, str]] = {}
    for d in lay.devices:
        for col, net in ((2 * d.slot - 1, d.left), (2 * d.slot + 1, d.right)):
            prev = ends.get((d.half, col))
            if prev is not None and prev[1] != net:
                rep.add("diffusion", f"{prev[0]} and {d.id} share a diffusion with different nets",
                        d.half, col)
            ends[d.half, col] = (d.id, net)


def _cuts(lay: Layout, cfg: TechConfig, rep: AuditReport) -> None:
    cut = {c.column for c in lay.cuts} | {0, 2 * lay.n_pitch}
    nets = lay.site_nets()
    for j in range(1, 2 * lay.n_pitch):
        p, n = nets.get(("P", j)), nets.get(("N", j))
        if p is not None and n is not None and p != n and j not in cut:
            rep.add("cut", f"column {j} joins {p} and {n} without a cut", j)
    for m in lay.merges:
        if m.column in cut:
            rep.add("cut", f"middle-of-line link across a cut for {m.net}", m.column)
        if nets.get(("P", m.column)) != m.net or nets.get(("N", m.column)) != m.net:
            rep.add("merge", f"middle-of-line link for {m.net} between foreign sites", m.column)
    if cfg.min_cut_width_cpp >= 2:
        for j in sorted(cut):
            if j % 2 == 0 and 0 < j < 2 * lay.n_pitch and j - 2 not in cut and j + 2 not in cut:
                rep.add("cut", "isolated single-pitch gate cut", j)


def _track_rules(t: tuple[int, int], segs: list[Segment], cfg: TechConfig, rep: AuditReport) -> None:
    layer, track = t
    rules = cfg.dr[layer]
    for s in segs:
        if s.length < rules.mar_length:
            rep.add("mar", f"L{layer} segment of {s.net} is {s.length} < {rules.mar_length}",
                    layer, track, s.start, s.end)
    for a, b in zip(segs, segs[1:]):
        if b.start <= a.end:
            if a.net != b.net:
                rep.add("overlap", f"{a.net} and {b.net} overlap on L{layer}", layer, track, b.start)
            else:
                rep.add("shape", f"{a.net} has touching segments on L{layer}", layer, track, b.start)
            continue
        gap = b.start - a.end
        if gap < rules.eol_spacing:
            rep.add("eol", f"L{layer} line ends {gap} apart < {rules.eol_spacing}", layer, track, a.end, b.start)


def _adjacent_track_rules(by_track, cfg: TechConfig, rep: AuditReport) -> None:
    for layer in (2, 3, 4):
        rules = cfg.dr[layer]
        tracks = sorted(t for (ly, t) in by_track if ly == layer)
        for t1, t2 in zip(tracks, tracks[1:]):
            s1, s2 = by_track[layer, t1], by_track[layer, t2]
            if rules.shr_distance > 0:
                for a in s1:
                    for b in s2:
                        for ea, eb in ((a.start, b.start), (a.end, b.end)):
                            if 0 < abs(ea - eb) < rules.shr_distance:
                                rep.add("shr", f"L{layer} ends {abs(ea - eb)} apart on adjacent tracks",
                                        layer, t1, t2, ea, eb)
            run = _prl_run(rules.prl_spacing_table, t2 - t1)
            if run is not None:
                for a in s1:
                    for b in s2:
                        overlap = min(a.end, b.end) - max(a.start, b.start)
                        if overlap >= run:
                            rep.add("prl", f"L{layer} parallel run {overlap} >= {run}", layer, t1, t2)


def _via_separation(lay: Layout, cfg: TechConfig, rep: AuditReport) -> None:
    by_low = defaultdict(list)
    for v in lay.vias:
        by_low[v.lower].append(v)
    for low, vs in sorted(by_low.items()):
        r = cfg.dr[low].via_separation_radius
        if r <= 0:
            continue
        vs.sort()
        for i, a in enumerate(vs):
            for b in vs[i + 1:]:
                if (a.x - b.x) ** 2 + (a.y - b.y) ** 2 < r * r:
                    rep.add("via_sep", f"V{low} vias {math.dist((a.x, a.y), (b.x, b.y)):.1f} apart < {r}",
                            low, a.x, a.y, b.x, b.y)


def _pins(lay: Layout, cfg: TechConfig, cols, rep: AuditReport, separation: bool, theta: int) -> None:
    pins = lay.pins
    layer = 2 if cfg.m0_pins_enabled else 3
    for p in pins:
        if p.layer != layer:
            rep.add("pin_layer", f"pin {p.net} on L{p.layer}, expected L{layer}", p.net)
        if not any(s.net == p.net and s.layer == p.layer and s.track == p.track
                   and s.start <= p.start and p.end <= s.end for s in lay.segments):
            rep.add("pin_metal", f"pin {p.net} not backed by its own metal", p.net)
    if separation and len(pins) > 1 and layer == 2:
        rows = lay.rows
        cap = 1 if len(pins) <= len(rows) else math.ceil(len(pins) / len(rows))
        per_row = defaultdict(list)
        for p in pins:
            per_row[p.track].append(p.net)
        for r, names in sorted(per_row.items()):
            if len(names) > cap:
                rep.add("ps", f"{len(names)} pins on row {r} (limit {cap})", r, *sorted(names))
    if theta > 0 and layer == 2:
        m1 = defaultdict(set)
        for s in lay.segments:
            if s.layer == 3:
                m1[s.track].add(s.net)
        for p in pins:
            open_cols = [c for c in cols[3] if 0 < c < lay.w_total and p.start <= c <= p.end
                         and not (m1.get(c, set()) - {p.net})]
            if len(open_cols) < theta:
                rep.add("mpo", f"pin {p.net} has {len(open_cols)} open M1 tracks < {theta}", p.net)


def _connectivity(lay: Layout, cols, rep: AuditReport) -> None:
    """Every net must be one tree joining all its terminals."""
    sites = lay.site_nets()
    reach = {}
    for (half, j) in sites:
        rows = lay.rows_p if half == "P" else lay.rows_n
        k = j // 2
        if j % 2 == 0:
            xs = [k * lay.pitch[0]]
        else:
            xs = [c for c in cols[2] if k * lay.pitch[0] <= c <= (k + 1) * lay.pitch[0]]
        reach[half, j] = {(x, y) for x in xs for y in rows}
    nets: dict[str, dict] = defaultdict(lambda: {"nodes": set(), "edges": []})
    for s in lay.segments:
        g = nets[s.net]
        cs = [c for c in (cols[s.layer] if s.layer in HORIZONTAL else lay.rows) if s.start <= c <= s.end]
        if not cs or cs[0] != s.start or cs[-1] != s.end:
            cs = sorted(set(cs) | {s.start, s.end})
        pts = [("v", s.layer) + s.point(c) for c in cs]
        g["nodes"].update(pts)
        g["edges"] += list(zip(pts, pts[1:]))
    for v in lay.vias:
        g = nets[v.net]
        a, b = ("v", v.lower, v.x, v.y), ("v", v.lower + 1, v.x, v.y)
        for end in (a, b):
            if end not in g["nodes"]:
                rep.add("via_landing", f"via of {v.net} lands off its metal", v.lower, v.x, v.y)
        g["nodes"].update((a, b))
        g["edges"].append((a, b))
    for c in lay.contacts:
        g = nets[c.net]
        site = ("s", c.half, c.column)
        if sites.get((c.half, c.column)) != c.net:
            rep.add("contact", f"contact of {c.net} on a foreign or empty site", c.half, c.column)
        elif (c.x, c.y) not in reach[c.half, c.column]:
            rep.add("contact", f"contact of {c.net} outside its site's reach", c.half, c.column, c.x, c.y)
        pt = ("v", 2, c.x, c.y)
        if pt not in g["nodes"]:
            rep.add("contact", f"contact of {c.net} lands off its metal", c.x, c.y)
        g["nodes"].update((site, pt))
        g["edges"].append((site, pt))
    for m in lay.merges:
        g = nets[m.net]
        a, b = ("s", "P", m.column), ("s", "N", m.column)
        g["nodes"].update((a, b))
        g["edges"].append((a, b))
    for (half, j), net in sites.items():
        if net not in lay.power:
            nets[net]["nodes"].add(("s", half, j))
    pin_of = {p.net: p for p in lay.pins}
    for net, g in sorted(nets.items()):
        terminals = {n for n in g["nodes"] if n[0] == "s"}
        p = pin_of.get(net)
        if p is not None:
            terminals.add(("v", p.layer) + (
                (p.start, p.track) if p.layer in HORIZONTAL else (p.track, p.start)))
        if len(terminals) < 2 and not g["edges"]:
            continue
        parent = {n: n for n in g["nodes"] | terminals}

        def find(n):
            while parent[n] != n:
                parent[n] = parent[parent[n]]
                n = parent[n]
            return n

        cycles = 0
        for a, b in g["edges"]:
            ra, rb = find(a), find(b)
            if ra == rb:
                cycles += 1
            else:
                parent[ra] = rb
        roots = {find(n) for n in terminals}
        if len(roots) > 1:
            rep.add("open", f"net {net} splits into {len(roots)} pieces", net)
        floating = {find(n) for n in g["nodes"]} - roots
        if floating:
            rep.add("floating", f"net {net} has metal not connected to any terminal", net)
        if cycles:
            rep.add("cycle", f"net {net} routing contains {cycles} loop(s)", net)
