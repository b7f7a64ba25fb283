import re
from dataclasses import replace
from pathlib import Path

import pytest

from cellforge.layout import (Layout, LayoutFormatError, Metrics, PlacedDevice, Segment, audit, metrics, parse,
                              render_svg, serialize)
from cellforge.tech import load_tech

from helpers import REGRESSION, solved

DATA = Path(__file__).parent / "data"


def golden(mp3=45) -> Layout:
    return parse((DATA / f"INV_X1_{mp3}.layout").read_text())


def test_text_round_trip():
    text = (DATA / "INV_X1_30.layout").read_text()
    assert serialize(parse(text)) == text


@pytest.mark.parametrize("cell, mp3", REGRESSION[:4])
def test_solver_layout_round_trip(cell, mp3):
    lay = solved(cell, mp3).layout
    assert serialize(parse(serialize(lay))) == serialize(lay)
    assert metrics(parse(serialize(lay))) == metrics(lay)


def test_golden_svg():
    assert render_svg(golden()) == (DATA / "INV_X1_45.svg").read_text()
    assert render_svg(golden()) == render_svg(golden())


def test_offset_shifts_m1_guides():
    lay = golden(30)
    xs = lambda l: [float(x) for x in re.findall(r'class="track1" x1="([\d.]+)"', render_svg(l))]
    base, shifted = xs(lay), xs(replace(lay, offset=(0, 0, 15, 0)))
    assert base == [160.0, 280.0]  # 30 and 60 nm
    assert shifted == [100.0, 220.0, 340.0]  # 15, 45, 75 nm


def test_golden_audit_clean():
    assert audit(golden(45), load_tech().with_gear_ratio(45)).ok
    assert audit(golden(30), load_tech().with_gear_ratio(30)).ok


def test_golden_metrics():
    m = metrics(golden(45))
    assert (m.cw_cpp, m.wirelength_nm, m.m2_tracks_used, m.sgd, m.dbx) == (2, 90, 0, 2, 0)
    assert m.pin_access == {"A": 1, "ZN": 1}


def test_empty_metrics():
    lay = Layout("E", 0, 0, (45, 24, 30, 24), (0, 0, 0, 0), (), ())
    assert metrics(lay) == Metrics(0, 0, 0, 0, 0)


def test_extract_inverter():
    lay = solved("INV_X1", 45).layout
    assert len(lay.devices) == 2
    assert len({d.x for d in lay.devices}) == 1  # shared gate column
    assert lay.cw == 2


def mutate(lay, old, new):
    segs = tuple(new if s == old else s for s in lay.segments)
    return replace(lay, segments=segs)


def test_short_segment_is_mar():
    lay = golden(30)
    seg = next(s for s in lay.segments if s.net == "A")
    rep = audit(mutate(lay, seg, seg._replace(end=45)), load_tech().with_gear_ratio(30))
    assert rep.kinds() == {"mar": 1}


def test_shared_slot_is_placement_violation():
    lay = golden(45)
    extra = PlacedDevice("MN9", "nmos", 1, 45, 0, "A", "VSS", "ZN")
    rep = audit(replace(lay, devices=lay.devices + (extra,)), load_tech().with_gear_ratio(45))
    assert "placement" in rep.kinds()


def test_foreign_net_overlap():
    lay = golden(45)
    rep = audit(replace(lay, segments=lay.segments + (Segment(2, 24, 90, 90, "ZN"),)),
                load_tech().with_gear_ratio(45))
    assert rep.kinds().get("overlap") == 1


def test_dangling_metal_is_floating():
    lay = golden(45)
    rep = audit(replace(lay, segments=lay.segments + (Segment(2, 96, 0, 45, "A"),)), load_tech().with_gear_ratio(45))
    assert rep.kinds() == {"floating": 1}


@pytest.mark.parametrize("text, line", [
    ("layout X\nbogus 1\nend\n", 2),
    ("layout X\nsegment 2 a 0 1 A\nend\n", 2),
    ("layout X\nend\nlayout Y\n", 3),
])
def test_parse_errors_carry_lines(text, line):
    with pytest.raises(LayoutFormatError) as exc:
        parse(text)
    assert exc.value.line == line


def test_parse_missing_end():
    with pytest.raises(LayoutFormatError, match="end"):
        parse("\n".join((DATA / "INV_X1_45.layout").read_text().splitlines()[:-1]))
