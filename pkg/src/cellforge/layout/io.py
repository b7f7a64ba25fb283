"""The ``.layout`` text format.

One record per line, whitespace separated, integers in nm::

    layout <cell>
    canvas <w_total> <n_pitch> via_weight <w>
    pitch <mp1> <mp2> <mp3> <mp4>
    offset <d1> <d2> <d3> <d4>
    rows N <y>... P <y>...
    power <net>...
    device <id> <pmos|nmos> <slot> <x> <flip> <gate> <left> <right>
    segment <layer> <track> <start> <end> <net>
    via <lower> <x> <y> <net>
    contact <net> <P|N> <column> <x> <y>
    merge <column> <net>
    cut <column> <gate|lisd>
    pin <net> <layer> <track> <start> <end> [<m1 column>...]
    break <P|N> <slot>
    end

Blank lines and lines starting with ``#`` are ignored.
"""
from __future__ import annotations

from .types import Contact, Cut, Layout, Merge, Pin, PlacedDevice, Segment, Via, canonical


class LayoutFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def serialize(layout: Layout) -> str:
    lay = canonical(layout)
    out = [f"layout {lay.cell}",
           f"canvas {lay.w_total} {lay.n_pitch} via_weight {lay.via_weight}",
           "pitch " + " ".join(map(str, lay.pitch)),
           "offset " + " ".join(map(str, lay.offset)),
           "rows N " + " ".join(map(str, lay.rows_n)) + " P " + " ".join(map(str, lay.rows_p)),
           " ".join(["power", *lay.power])]
    out += [f"device {d.id} {d.kind} {d.slot} {d.x} {d.flip} {d.gate} {d.left} {d.right}" for d in lay.devices]
    out += [f"segment {s.layer} {s.track} {s.start} {s.end} {s.net}" for s in lay.segments]
    out += [f"via {v.lower} {v.x} {v.y} {v.net}" for v in lay.vias]
    out += [f"contact {c.net} {c.half} {c.column} {c.x} {c.y}" for c in lay.contacts]
    out += [f"merge {m.column} {m.net}" for m in lay.merges]
    out += [f"cut {c.column} {c.kind}" for c in lay.cuts]
    out += [" ".join(["pin", p.net, str(p.layer), str(p.track), str(p.start), str(p.end), *map(str, p.access)])
            for p in lay.pins]
    out += [f"break {h} {k}" for h, k in lay.breaks]
    out.append("end")
    return "\n".join(out) + "\n"


def parse(text: str) -> Layout:
    head: dict[str, list[str]] = {}
    recs: dict[str, list] = {k: [] for k in ("device", "segment", "via", "contact", "merge", "cut", "pin", "break")}
    ended = False
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ended:
            raise LayoutFormatError("content after 'end'", no)
        tok = line.split()
        kind, args = tok[0], tok[1:]
        try:
            if kind == "end":
                ended = True
            elif kind in ("layout", "canvas", "pitch", "offset", "rows", "power"):
                if kind in head:
                    raise LayoutFormatError(f"duplicate '{kind}' line", no)
                head[kind] = args
            elif kind == "device":
                i, k, slot, x, flip, gate, left, right = args
                recs[kind].append(PlacedDevice(i, k, int(slot), int(x), int(flip), gate, left, right))
            elif kind == "segment":
                layer, track, a, b, net = args
                recs[kind].append(Segment(int(layer), int(track), int(a), int(b), net))
            elif kind == "via":
                low, x, y, net = args
                recs[kind].append(Via(int(low), int(x), int(y), net))
            elif kind == "contact":
                net, half, col, x, y = args
                recs[kind].append(Contact(net, half, int(col), int(x), int(y)))
            elif kind == "merge":
                col, net = args
                recs[kind].append(Merge(int(col), net))
            elif kind == "cut":
                col, ck = args
                recs[kind].append(Cut(int(col), ck))
            elif kind == "pin":
                net, layer, track, a, b, *acc = args
                recs[kind].append(Pin(net, int(layer), int(track), int(a), int(b), tuple(int(c) for c in acc)))
            elif kind == "break":
                half, k = args
                recs[kind].append((half, int(k)))
            else:
                raise LayoutFormatError(f"unknown record {kind!r}", no)
        except ValueError as exc:
            if isinstance(exc, LayoutFormatError):
                raise
            raise LayoutFormatError(f"malformed {kind} record: {exc}", no) from exc
    for need in ("layout", "canvas", "pitch", "offset", "rows"):
        if need not in head:
            raise LayoutFormatError(f"missing '{need}' line")
    if not ended:
        raise LayoutFormatError("missing 'end'")
    canvas = head["canvas"]
    rows = head["rows"]
    try:
        split = rows.index("P")
        rows_n = tuple(int(r) for r in rows[1:split])
        rows_p = tuple(int(r) for r in rows[split + 1:])
        lay = Layout(
            cell=head["layout"][0], w_total=int(canvas[0]), n_pitch=int(canvas[1]),
            pitch=tuple(int(v) for v in head["pitch"]), offset=tuple(int(v) for v in head["offset"]),
            rows_n=rows_n, rows_p=rows_p, devices=tuple(recs["device"]), segments=tuple(recs["segment"]),
            vias=tuple(recs["via"]), contacts=tuple(recs["contact"]), merges=tuple(recs["merge"]),
            cuts=tuple(recs["cut"]), pins=tuple(recs["pin"]), breaks=tuple(recs["break"]),
            via_weight=int(canvas[3]) if len(canvas) > 3 else 0, power=tuple(head.get("power", ())))
    except (ValueError, IndexError) as exc:
        raise LayoutFormatError(f"malformed header: {exc}") from exc
    return canonical(lay)
