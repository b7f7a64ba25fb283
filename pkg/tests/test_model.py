import itertools
from collections import Counter
from dataclasses import replace

import pytest

from cellforge.accel import GapPolicy, itp_constraints
from cellforge.layout import Metrics
from cellforge.model.encode import EncodeOptions, EncodingError, encode
from cellforge.model.ir import ConstraintModel, model_from_text, model_to_text
from cellforge.netlist import Kind, Transistor, bundled_cell, fold, parse_netlist
from cellforge.solver import verify
from cellforge.solver.engine import Engine, Shared
from cellforge.tech import DesignRuleSet, ObjectiveWeights, load_tech

from helpers import solved


def tags(enc, prefix):
    return sum(1 for c in enc.model.constraints if (c.tag or "").startswith(prefix))


def engine(enc):
    return Engine(enc.model, Shared(GapPolicy()))


def test_objective_arithmetic():
    m = Metrics(cw_cpp=5, wirelength_nm=20, m2_tracks_used=0, sgd=3, dbx=7)
    assert m.objective(ObjectiveWeights()) == 5010


@pytest.mark.parametrize("cell, mp3", [("INV_X1", 45), ("NAND2_X1", 30)])
def test_objective_is_weighted_component_sum(cell, mp3):
    r = solved(cell, mp3)
    enc, vals, w = r.encoding, r.result.assignment, r.weights
    comp = {k: enc.component_value(k, vals) for k in ("CW", "WL", "SGD", "DBX", "M2")}
    expect = (w.lambda0 * comp["CW"] + w.lambda1 * comp["WL"] - w.lambda2 * comp["SGD"]
              - w.lambda3 * comp["DBX"] + w.lambda4 * comp["M2"])
    assert enc.model.objective_value(vals) == expect == r.objective
    assert comp["CW"] == r.metrics.cw_cpp and comp["WL"] == r.metrics.wirelength_nm


def test_zero_mar_emits_no_mar_constraints():
    base = load_tech().with_gear_ratio(45)
    layers = {ly: replace(base.dr[ly], mar_length=0) for ly in (1, 2, 3, 4)}
    enc = encode(bundled_cell("INV_X1"), replace(base, dr=DesignRuleSet(layers)))
    assert tags(enc, "mar_") == 0
    assert tags(encode(bundled_cell("INV_X1"), base), "mar_") > 0


@pytest.mark.parametrize("width", [1, 2])
def test_cut_grouping(width):
    cfg = replace(load_tech().with_gear_ratio(45), min_cut_width_cpp=width)
    enc = encode(bundled_cell("NAND2_X1"), cfg)
    assert tags(enc, "cutwidth_") == (len(enc.slots) if width == 2 else 0)


def test_isolated_gate_cut_is_refuted():
    cfg = replace(load_tech().with_gear_ratio(45), min_cut_width_cpp=2)
    enc = encode(bundled_cell("NAND2_X1"), cfg)
    eng = engine(enc)
    assert eng.propagate()
    eng.assign(enc.scx[4], 1)
    eng.assign(enc.scx[2], 0)
    eng.assign(enc.scx[6], 0)
    assert not eng.propagate()


def test_inverter_has_single_slot():
    enc = encode(bundled_cell("INV_X1"), load_tech().with_gear_ratio(45))
    assert list(enc.slots) == [1]
    assert len(enc.y) == 4  # two devices, one slot, two orientations


def test_same_row_devices_cannot_share_a_slot():
    enc = encode(bundled_cell("NAND2_X1"), load_tech().with_gear_ratio(45))
    p = [d for d in enc.devices if enc.device_kind[d] is Kind.PMOS]
    eng = engine(enc)
    eng.assign(enc.y[p[0], 1, 0], 1)
    eng.assign(enc.y[p[1], 1, 1], 1)
    assert not eng.propagate()


def test_different_nets_across_closed_cut_conflict():
    enc = encode(bundled_cell("NAND2_X1"), load_tech().with_gear_ratio(45))
    j = 3
    p_nets = sorted(n for (h, jj, n) in enc.u if h == "P" and jj == j)
    n_nets = sorted(n for (h, jj, n) in enc.u if h == "N" and jj == j and n != p_nets[0])
    eng = engine(enc)
    eng.assign(enc.u["P", j, p_nets[0]], 1)
    eng.assign(enc.u["N", j, n_nets[0]], 1)
    eng.assign(enc.scx[j], 0)
    assert not eng.propagate()


def test_unfolded_netlist_rejected():
    with pytest.raises(EncodingError, match="fold"):
        encode(parse_netlist(".SUBCKT X A Z VDD VSS\n*.PININFO A:I Z:O VDD:P VSS:G\n"
                             "MP0 Z A VDD VDD pmos w=2\nMN0 Z A VSS VSS nmos w=1\n.ENDS\n"), load_tech())


def test_itp_halves_placements_of_a_pair():
    m = ConstraintModel()
    devs = [Transistor(f"M{i}", Kind.PMOS, "A", "VDD", "Z", 1) for i in range(2)]
    x = {t.id: m.new_int(f"x[{t.id}]", 1, 3) for t in devs}

    def count():
        return sum(1 for a, b in itertools.product(range(1, 4), repeat=2) if a != b and verify([a, b], m).ok)

    free = count()
    assert itp_constraints(m, devs, x) == 1
    assert (free, count()) == (6, 3)


def test_itp_respects_cluster_classes():
    m = ConstraintModel()
    devs = [Transistor(f"M{i}", Kind.NMOS, "A", "VSS", "Z", 1) for i in range(4)]
    x = {t.id: m.new_int(f"x[{t.id}]", 1, 4) for t in devs}
    # M0/M1 clustered, M2/M3 free: no link may cross the two classes
    assert itp_constraints(m, devs, x, clusters=[("M0", "M1")]) == 2


def test_pin_separation_rows():
    cfg = load_tech().with_gear_ratio(45)
    nl = bundled_cell("NAND2_X1")
    enc = encode(nl, cfg)
    assert tags(enc, "pin_sep_") == len(enc.grid.rows)
    assert tags(encode(nl, cfg, EncodeOptions(pin_separation=False)), "pin_sep_") == 0


def test_theta_zero_adds_no_opening_constraints():
    enc = encode(bundled_cell("INV_X1"), load_tech().with_gear_ratio(45), EncodeOptions(theta=0))
    assert tags(enc, "mpo") == 0 and not enc.pin_open


def test_theta_above_track_count_is_diagnosed():
    with pytest.raises(EncodingError, match="minimum pin opening"):
        encode(bundled_cell("INV_X1"), load_tech().with_gear_ratio(45), EncodeOptions(theta=9))


def test_theta_adds_cardinality_per_pin():
    enc = encode(bundled_cell("INV_X1"), load_tech().with_gear_ratio(30), EncodeOptions(theta=1))
    assert tags(enc, "mpo_A") == 1 and tags(enc, "mpo_ZN") == 1


def test_encoded_model_round_trips():
    enc = encode(bundled_cell("INV_X1"), load_tech().with_gear_ratio(30))
    text = model_to_text(enc.model)
    again = model_from_text(text)
    assert model_to_text(again) == text
    assert again.stats() == enc.model.stats()


def test_every_routed_net_has_commodities():
    nl = fold(bundled_cell("NAND2_X1"))
    enc = encode(nl, load_tech().with_gear_ratio(30))
    per_net = Counter(c.net for c in enc.commodities)
    for net in enc.routed_nets:
        assert per_net[net] == len(enc.terminals[net].sinks)


def test_flow_conserves_on_solution():
    r = solved("NAND2_X1", 30)
    enc, vals = r.encoding, r.result.assignment
    for com in enc.commodities:
        bal = Counter()
        for (lid, d), fv in com.f.items():
            if vals[fv]:
                lk = enc.flow.links[lid]
                tail, head = (lk.a, lk.b) if d == 0 else (lk.b, lk.a)
                bal[tail] += 1
                bal[head] -= 1
        nz = sorted(v for v in bal.values() if v)
        # one unit leaves the source and reaches the sink, unless both share a merged site
        assert nz in ([], [-1, 1])
