import math
from dataclasses import replace

import pytest
import yaml
from hypothesis import given, strategies as st

from cellforge.tech import (ConfigError, ObjectiveWeights, TechConfig, check_placement_alignment,
                            count_m1_resources, enumerate_offsets, load_tech, tech_from_dict, tech_to_dict,
                            total_cell_width, weights_for_set)


@pytest.mark.parametrize("mp3, expected", [(45, [0]), (30, [0, 15]), (27, [0, 9, 18])])
def test_offsets_match_paper(mp3, expected):
    assert enumerate_offsets(45, mp3) == expected


def test_offsets_reject_bad_pitch():
    with pytest.raises(ValueError):
        enumerate_offsets(0, 30)


@pytest.mark.parametrize("args, w", [((270, 225, 1, 45), 315), ((0, 0, 0, 45), 0), ((90, 90, 2, 30), 150)])
def test_total_cell_width(args, w):
    assert total_cell_width(*args) == w


@pytest.mark.parametrize("mp3, delta, count", [(45, 0, 6), (30, 0, 10), (27, 0, 11), (27, 9, 12), (27, 18, 11)])
def test_m1_resources_at_seven_cpp(mp3, delta, count):
    assert count_m1_resources(7, load_tech().with_gear_ratio(mp3, delta)) == count


def test_m1_resources_reject_zero_width():
    with pytest.raises(ValueError):
        count_m1_resources(0, load_tech())


def test_alignment_paper_scenarios():
    base = load_tech()
    assert check_placement_alignment(3, base.with_gear_ratio(30, 0), 0)
    # a 2-CPP cell abutting the 3-CPP cell starts at an odd poly position
    assert not check_placement_alignment(2, base.with_gear_ratio(30, 0), 135)
    assert check_placement_alignment(2, base.with_gear_ratio(30, 15), 135)


def test_alignment_is_periodic_in_lcm():
    base = load_tech().with_gear_ratio(30, 0)
    period = math.lcm(45, 30)
    for origin in range(0, 4 * period, 45):
        assert check_placement_alignment(2, base, origin) == check_placement_alignment(2, base, origin % period)


def test_every_offset_aligns_somewhere():
    base = load_tech()
    for mp3 in (45, 30, 27):
        for d in enumerate_offsets(45, mp3):
            t = base.with_gear_ratio(mp3, d)
            assert any(check_placement_alignment(w, t, o) for w in range(1, 8)
                       for o in range(0, math.lcm(45, mp3), 45))


@given(st.integers(1, 20))
def test_one_to_one_count_is_width_minus_one(w):
    assert count_m1_resources(w, load_tech().with_gear_ratio(45)) == w - 1


def test_offset_counts_differ_by_at_most_one():
    base = load_tech()
    for mp3 in (45, 30, 27):
        for w in range(1, 21):
            counts = [count_m1_resources(w, base.with_gear_ratio(mp3, d)) for d in enumerate_offsets(45, mp3)]
            assert max(counts) - min(counts) <= 1


@given(st.integers(1, 90), st.integers(1, 90))
def test_offset_count_formula(a, b):
    offs = enumerate_offsets(a, b)
    assert len(offs) == b // math.gcd(a, b) and offs[0] == 0


def test_bundled_tech_defaults():
    t = load_tech()
    assert t.mp == {1: 45, 2: 24, 3: 30, 4: 24}
    assert t.row_count == 4 and t.c_db == 1
    assert t.weights.as_tuple() == (1000, 1, 1, 1, 1)
    assert t.gear_ratio == (45, 30)


def test_yaml_round_trip(tmp_path):
    t = load_tech()
    p = tmp_path / "t.yaml"
    p.write_text(yaml.safe_dump(tech_to_dict(t)))
    assert load_tech(p) == t


@pytest.mark.parametrize("patch, msg", [
    ({"mp": {1: 45, 2: 24, 3: 30, 4: 20}}, "share pitch"),
    ({"delta": {3: 30}}, "delta3"),
    ({"delta": {3: 10}}, "not admissible"),
    ({"min_cut_width_cpp": 3}, "min_cut_width"),
    ({"bogus": 1}, "unknown"),
])
def test_config_errors(patch, msg):
    raw = tech_to_dict(load_tech())
    raw.update(patch)
    with pytest.raises(ConfigError, match=msg):
        tech_from_dict(raw)


def test_weights_for_sets():
    w = ObjectiveWeights()
    assert weights_for_set(w, "a").as_tuple() == (1000, 1, 0, 0, 0)
    assert weights_for_set(w, "b").as_tuple() == (1000, 1, 1, 0, 0)
    assert weights_for_set(w, "e").as_tuple() == (1000, 1, 1, 1, 1)
    with pytest.raises(ConfigError):
        weights_for_set(w, "z")


def test_config_is_immutable():
    t = load_tech()
    with pytest.raises(Exception):
        t.c_db = 3  # type: ignore[misc]
    assert replace(t, c_db=3).c_db == 3 and t.c_db == 1
    assert isinstance(t, TechConfig)
