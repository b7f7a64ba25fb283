"""Turn a solver assignment into geometry."""
from __future__ import annotations

from typing import Sequence

from ..model.encode import Encoding
from .types import HORIZONTAL, Contact, Cut, Layout, Merge, Pin, PlacedDevice, Segment, Via, canonical


class ExtractionError(RuntimeError):
    pass


def _runs(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Merge touching [a, b] intervals."""
    out: list[list[int]] = []
    for a, b in sorted(points):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def extract(values: Sequence[int], enc: Encoding) -> Layout:
    if len(values) != enc.model.num_vars:
        raise ExtractionError("assignment does not match the model")
    cfg, g, fl = enc.cfg, enc.grid, enc.flow
    mp1 = cfg.mp[1]
    nl = enc.netlist
    devices = []
    for (d, k, phi), v in sorted(enc.y.items()):
        if values[v] != 1:
            continue
        t = nl.device[d]
        left, right = (t.source_net, t.drain_net) if phi == 0 else (t.drain_net, t.source_net)
        devices.append(PlacedDevice(d, t.kind.value, k, k * mp1, phi, t.gate_net, left, right))
    placed = {d.id for d in devices}
    if placed != set(enc.devices):
        raise ExtractionError(f"devices without a unique placement: {sorted(set(enc.devices) - placed)}")

    def xy(v: int) -> tuple[int, int, int]:
        vt = g.vertices[v]
        return vt.layer, vt.col, vt.row

    pieces: dict[tuple[str, int, int], list[tuple[int, int]]] = {}
    vias, contacts, merges = [], [], []
    touched: dict[tuple[str, int], set[int]] = {}  # (net, vertex) wires on the vertex's own layer
    for (net, lid), xv in sorted(enc.xl.items()):
        if values[xv] != 1:
            continue
        lk = fl.links[lid]
        if lk.kind == "wire":
            la, xa, ya = xy(lk.a)
            _, xb, yb = xy(lk.b)
            if la in HORIZONTAL:
                pieces.setdefault((net, la, ya), []).append((min(xa, xb), max(xa, xb)))
            else:
                pieces.setdefault((net, la, xa), []).append((min(ya, yb), max(ya, yb)))
            touched.setdefault((net, lk.a), set()).add(lid)
            touched.setdefault((net, lk.b), set()).add(lid)
        elif lk.kind == "via":
            la, xa, ya = xy(lk.a)
            lb = g.vertices[lk.b].layer
            vias.append(Via(min(la, lb), xa, ya, net))
        elif lk.kind == "access":
            site = enc.flow.site_of_node(lk.a) or enc.flow.site_of_node(lk.b)
            v = lk.b if site.node == lk.a else lk.a
            _, x, y = xy(v)
            contacts.append(Contact(net, site.half, site.col, x, y))
        elif lk.kind == "mol":
            merges.append(Merge(lk.col, net))
    segments = []
    for (net, layer, track), spans in pieces.items():
        for a, b in _runs(spans):
            segments.append(Segment(layer, track, a, b, net))
    # used vertices without a wire on their own layer are zero-length landings
    for (net, v), uv in sorted(enc.used.items()):
        if values[uv] == 1 and (net, v) not in touched:
            layer, x, y = xy(v)
            track, c = (y, x) if layer in HORIZONTAL else (x, y)
            segments.append(Segment(layer, track, c, c, net))
    cuts = [Cut(j, "gate" if j % 2 == 0 else "lisd") for j, v in sorted(enc.scx.items())
            if 0 < j < 2 * enc.n_pitch and values[v] == 1]
    used_m1: dict[int, set[str]] = {}
    for s in segments:
        if s.layer == 3:
            used_m1.setdefault(s.track, set()).add(s.net)
    pins = []
    m1_cols = sorted({g.vertices[v].col for v in fl.vertex_nodes if g.vertices[v].layer == 3})
    for p, pos in sorted(enc.pin_pos.items()):
        chosen = [v for v, pv in pos.items() if values[pv] == 1]
        if len(chosen) != 1:
            raise ExtractionError(f"pin {p} has {len(chosen)} positions")
        ext = [v for v, qv in enc.pin_ext.get(p, {}).items() if values[qv] == 1] or chosen
        layer, x0, y0 = xy(chosen[0])
        horiz = layer in HORIZONTAL
        coords = [g.vertices[v].col if horiz else g.vertices[v].row for v in ext]
        lo_c, hi_c = min(coords), max(coords)
        access = tuple(c for c in m1_cols if lo_c <= c <= hi_c and not (used_m1.get(c, set()) - {p})) \
            if horiz else ()
        pins.append(Pin(p, layer, y0 if horiz else x0, lo_c, hi_c, access))
    occupied = {(d.half, d.slot) for d in devices}
    cw = 1 + max(d.slot for d in devices)
    breaks = [(h, k) for h in ("P", "N") for k in range(1, cw) if (h, k) not in occupied]
    lay = Layout(
        cell=nl.name, w_total=enc.w_total, n_pitch=enc.n_pitch,
        pitch=tuple(cfg.mp[i] for i in (1, 2, 3, 4)), offset=tuple(cfg.delta.get(i, 0) for i in (1, 2, 3, 4)),
        rows_n=tuple(enc.half_rows["N"]), rows_p=tuple(enc.half_rows["P"]), devices=tuple(devices),
        segments=tuple(segments), vias=tuple(vias), contacts=tuple(contacts), merges=tuple(merges),
        cuts=tuple(cuts), pins=tuple(pins), breaks=tuple(breaks), via_weight=cfg.wl_via_weight,
        power=tuple(sorted(nl.power_nets)))
    return canonical(lay)
