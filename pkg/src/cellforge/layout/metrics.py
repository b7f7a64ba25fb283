"""Report metrics recomputed from layout geometry."""
from __future__ import annotations

from .types import Layout, Metrics


def metrics(lay: Layout) -> Metrics:
    if not lay.devices and not lay.segments:
        return Metrics(0, 0, 0, 0, 0)
    wl = sum(s.length for s in lay.segments) + lay.via_weight * len(lay.vias)
    m2 = len({s.track for s in lay.segments if s.layer == 4})
    occupied = {(d.half, d.slot) for d in lay.devices}
    slots = range(1, lay.n_pitch)
    abut = sum(1 for h in ("P", "N") for k in slots if (h, k) in occupied and (h, k + 1) in occupied)
    cut = {c.column for c in lay.cuts}
    nets = lay.site_nets()
    merged = sum(1 for j in range(1, 2 * lay.n_pitch)
                 if j not in cut and ("P", j) in nets and nets["P", j] == nets.get(("N", j)))
    # empty slots weighted by position: rewards pushing free space to the right
    dbx = sum(2 * k for h in ("P", "N") for k in slots if (h, k) not in occupied)
    return Metrics(cw_cpp=lay.cw, wirelength_nm=wl, m2_tracks_used=m2, sgd=abut + merged, dbx=dbx,
                   abutments=abut, merges=merged, pin_access={p.net: len(p.access) for p in lay.pins})
