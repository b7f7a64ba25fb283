"""Deterministic SVG drawing of a layout."""
from __future__ import annotations

from xml.sax.saxutils import escape

from .types import HORIZONTAL, Layout, canonical

SCALE = 4
MARGIN = 40
COLORS = {
    "pdiff": "#f2c36b", "ndiff": "#8fd18b", "gate": "#d9534f", "mol": "#9b59b6",
    2: "#3b7dd8", 3: "#e67e22", 4: "#16a085", "via": "#222222", "cut": "#555555", "pin": "#c0392b",
}
WIDTH = {2: 8, 3: 8, 4: 6}


def render_svg(layout: Layout) -> str:
    lay = canonical(layout)
    mp1 = lay.pitch[0]
    rows = lay.rows
    top = (max(rows) if rows else 0) + lay.pitch[1]
    w, h = lay.w_total * SCALE + 2 * MARGIN, top * SCALE + 2 * MARGIN

    def X(x: float) -> float:
        return MARGIN + x * SCALE

    def Y(y: float) -> float:
        return MARGIN + (top - y) * SCALE

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<title>{escape(lay.cell)}</title>',
           f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>',
           f'<rect x="{X(0)}" y="{Y(top)}" width="{lay.w_total * SCALE}" height="{top * SCALE}" '
           f'fill="none" stroke="#999999" stroke-dasharray="4 4"/>']
    # M1 track guides make the offset visible
    for c in range(lay.offset[2], lay.w_total + 1, lay.pitch[2]):
        if 0 < c < lay.w_total:
            out.append(f'<line class="track1" x1="{X(c)}" y1="{Y(top)}" x2="{X(c)}" y2="{Y(0)}" '
                       f'stroke="{COLORS[3]}" stroke-width="1" opacity="0.25"/>')
    band = {"P": (min(lay.rows_p, default=0), max(lay.rows_p, default=0)),
            "N": (min(lay.rows_n, default=0), max(lay.rows_n, default=0))}
    for d in lay.devices:
        lo, hi = band[d.half]
        color = COLORS["pdiff" if d.half == "P" else "ndiff"]
        x0 = d.x - mp1 / 2
        out.append(f'<rect class="device" data-id="{escape(d.id)}" x="{X(x0)}" y="{Y(hi + 6)}" '
                   f'width="{mp1 * SCALE}" height="{(hi - lo + 12) * SCALE}" fill="{color}" opacity="0.5"/>')
        out.append(f'<line x1="{X(d.x)}" y1="{Y(hi + 10)}" x2="{X(d.x)}" y2="{Y(lo - 10)}" '
                   f'stroke="{COLORS["gate"]}" stroke-width="4"/>')
        out.append(f'<text x="{X(d.x) + 3}" y="{Y(lo - 10) + 12}" font-size="10">{escape(d.id)}</text>')
    for m in lay.merges:
        x = m.column * mp1 / 2
        out.append(f'<line class="mol" x1="{X(x)}" y1="{Y(band["P"][0])}" x2="{X(x)}" y2="{Y(band["N"][1])}" '
                   f'stroke="{COLORS["mol"]}" stroke-width="3" stroke-dasharray="6 3"/>')
    for c in lay.cuts:
        x = c.column * mp1 / 2
        out.append(f'<rect class="cut" x="{X(x) - 3}" y="{Y(band["P"][0]) + 4}" width="6" '
                   f'height="{(band["P"][0] - band["N"][1]) * SCALE - 8}" fill="{COLORS["cut"]}"/>')
        out.append(f'<text x="{X(x) - 6}" y="{Y(0) + 14}" font-size="9">{c.kind}</text>')
    for s in lay.segments:
        (x1, y1), (x2, y2) = s.point(s.start), s.point(s.end)
        pad = 3 if s.length == 0 else 0
        dx = pad if s.layer in HORIZONTAL else 0
        dy = pad if s.layer not in HORIZONTAL else 0
        out.append(f'<line class="m{s.layer}" data-net="{escape(s.net)}" x1="{X(x1) - dx}" y1="{Y(y1) + dy}" '
                   f'x2="{X(x2) + dx}" y2="{Y(y2) - dy}" stroke="{COLORS[s.layer]}" '
                   f'stroke-width="{WIDTH[s.layer]}" stroke-linecap="square" opacity="0.8"/>')
    for c in lay.contacts:
        out.append(f'<circle class="contact" cx="{X(c.x)}" cy="{Y(c.y)}" r="3" fill="{COLORS["mol"]}"/>')
    for v in lay.vias:
        out.append(f'<rect class="via{v.lower}" x="{X(v.x) - 4}" y="{Y(v.y) - 4}" width="8" height="8" '
                   f'fill="{COLORS["via"]}"/>')
    for p in lay.pins:
        (x1, y1), (x2, y2) = ((p.start, p.track), (p.end, p.track)) if p.layer in HORIZONTAL else \
            ((p.track, p.start), (p.track, p.end))
        out.append(f'<rect class="pin" x="{X(min(x1, x2)) - 6}" y="{Y(max(y1, y2)) - 6}" '
                   f'width="{abs(x2 - x1) * SCALE + 12}" height="{abs(y2 - y1) * SCALE + 12}" fill="none" '
                   f'stroke="{COLORS["pin"]}" stroke-width="2"/>')
        out.append(f'<text x="{X(min(x1, x2))}" y="{Y(max(y1, y2)) - 8}" font-size="11" '
                   f'fill="{COLORS["pin"]}">{escape(p.net)} ({len(p.access)})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
