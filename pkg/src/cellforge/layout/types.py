"""Geometric layout records. All coordinates are integer nanometres.

Horizontal layers (2 and 4) keep their track as the row y coordinate and
span x; the vertical layer 3 keeps its track as the column x and spans y.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

HORIZONTAL = frozenset({2, 4})


class PlacedDevice(NamedTuple):
    id: str
    kind: str  # pmos | nmos
    slot: int
    x: int  # gate column, nm
    flip: int  # 0: source on the left
    gate: str
    left: str
    right: str

    @property
    def half(self) -> str:
        return "P" if self.kind == "pmos" else "N"


class Segment(NamedTuple):
    layer: int
    track: int
    start: int
    end: int
    net: str

    @property
    def length(self) -> int:
        return self.end - self.start

    def point(self, coord: int) -> tuple[int, int]:
        """(x, y) of a position along the segment."""
        return (coord, self.track) if self.layer in HORIZONTAL else (self.track, coord)

    def covers(self, x: int, y: int) -> bool:
        if self.layer in HORIZONTAL:
            return y == self.track and self.start <= x <= self.end
        return x == self.track and self.start <= y <= self.end


class Via(NamedTuple):
    lower: int  # joins layer ``lower`` and ``lower + 1``
    x: int
    y: int
    net: str


class Contact(NamedTuple):
    """Diffusion or gate contact from a placement site to a layer-2 point."""
    net: str
    half: str
    column: int
    x: int
    y: int


class Merge(NamedTuple):
    """Middle-of-line link joining the P and N sites of one column."""
    column: int
    net: str


class Cut(NamedTuple):
    column: int
    kind: str  # gate | lisd


class Pin(NamedTuple):
    net: str
    layer: int
    track: int
    start: int
    end: int
    access: tuple[int, ...]  # unblocked M1 columns under the pin


@dataclass(frozen=True)
class Layout:
    cell: str
    w_total: int
    n_pitch: int  # placement pitches across the canvas (slots are 1 .. n_pitch - 1)
    pitch: tuple[int, int, int, int]  # mp1 .. mp4
    offset: tuple[int, int, int, int]  # delta1 .. delta4
    rows_n: tuple[int, ...]
    rows_p: tuple[int, ...]
    devices: tuple[PlacedDevice, ...] = ()
    segments: tuple[Segment, ...] = ()
    vias: tuple[Via, ...] = ()
    contacts: tuple[Contact, ...] = ()
    merges: tuple[Merge, ...] = ()
    cuts: tuple[Cut, ...] = ()
    pins: tuple[Pin, ...] = ()
    breaks: tuple[tuple[str, int], ...] = ()  # empty (half, slot) inside the active width
    via_weight: int = 0
    power: tuple[str, ...] = ()  # rail nets, never routed inside the cell

    @property
    def rows(self) -> tuple[int, ...]:
        return tuple(sorted(self.rows_n + self.rows_p))

    @property
    def cw(self) -> int:
        return 1 + max((d.slot for d in self.devices), default=0)

    def site_nets(self) -> dict[tuple[str, int], str]:
        """Net on every occupied placement site (half, column)."""
        out: dict[tuple[str, int], str] = {}
        for d in self.devices:
            k = d.slot
            out[d.half, 2 * k] = d.gate
            out.setdefault((d.half, 2 * k - 1), d.left)
            out.setdefault((d.half, 2 * k + 1), d.right)
        return out

    def nets(self) -> list[str]:
        names = {s.net for s in self.segments} | {v.net for v in self.vias} | {p.net for p in self.pins}
        names |= {c.net for c in self.contacts} | {m.net for m in self.merges}
        return sorted(names)


@dataclass(frozen=True)
class Metrics:
    cw_cpp: int
    wirelength_nm: int
    m2_tracks_used: int
    sgd: int
    dbx: int
    abutments: int = 0
    merges: int = 0
    pin_access: dict[str, int] = field(default_factory=dict)

    def objective(self, weights) -> int:
        return (weights.lambda0 * self.cw_cpp + weights.lambda1 * self.wirelength_nm
                - weights.lambda2 * self.sgd - weights.lambda3 * self.dbx + weights.lambda4 * self.m2_tracks_used)


def canonical(layout: Layout) -> Layout:
    """Same layout with every record list sorted."""
    from dataclasses import replace

    return replace(layout, devices=tuple(sorted(layout.devices, key=lambda d: (d.kind, d.slot, d.id))),
                   segments=tuple(sorted(layout.segments)), vias=tuple(sorted(layout.vias)),
                   contacts=tuple(sorted(layout.contacts)), merges=tuple(sorted(layout.merges)),
                   cuts=tuple(sorted(layout.cuts)), pins=tuple(sorted(layout.pins)),
                   breaks=tuple(sorted(layout.breaks)))


def find_pin(layout: Layout, net: str) -> Optional[Pin]:
    return next((p for p in layout.pins if p.net == net), None)
