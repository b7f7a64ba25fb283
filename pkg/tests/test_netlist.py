import pytest
from hypothesis import given, settings, strategies as st

from cellforge.netlist import (Kind, Netlist, NetlistError, Transistor, bundled_cell, bundled_cell_names,
                               derive_terminals, dump_netlist, fold, identical_groups, parse_netlist)

HEAD = ".SUBCKT X A Z VDD VSS\n*.PININFO A:I Z:O VDD:P VSS:G\n"


def test_inverter_structure():
    nl = bundled_cell("INV_X1")
    assert len(nl.transistors) == 2
    assert nl.nets == {"A", "ZN"}
    assert set(nl.pins) == {"A", "ZN"}
    assert nl.power_nets == {"VDD", "VSS"}


@pytest.mark.parametrize("cell, fets, nets", [("DFFHQN_X1", 24, 17), ("BUF_X16", 48, 5), ("INV_X1", 2, 4)])
def test_paper_table_counts(cell, fets, nets):
    # the paper's net column counts the supply nets too
    nl = bundled_cell(cell)
    assert len(nl.transistors) == fets
    assert nl.net_count(include_power=True) == nets
    assert nl.net_count() == nets - 2


@pytest.mark.parametrize("body, msg, line", [
    ("MP0 Z A VDD\n.ENDS\n", "M-card", 3),
    ("MP0 Z A VDD VDD pmos w=0\nMN0 Z A VSS VSS nmos w=1\n.ENDS\n", "zero-width", 3),
    ("MP0 Z A VDD VDD foo w=1\n.ENDS\n", "unknown device model", 3),
    ("XU1 A Z inv\n.ENDS\n", "hierarchical", 3),
])
def test_spice_errors_carry_line_numbers(body, msg, line):
    with pytest.raises(NetlistError, match=msg) as exc:
        parse_netlist(HEAD + body)
    assert exc.value.line == line


def test_missing_pin_declaration():
    text = ".SUBCKT X A Z VDD VSS\n*.PININFO A:I VDD:P VSS:G\nMP0 Z A VDD VDD pmos w=1\n.ENDS\n"
    with pytest.raises(NetlistError, match="missing pin declaration"):
        parse_netlist(text)


def test_undefined_net_in_text_format():
    text = "cell X\npin A in\npower VDD\nnet A\nfet M1 pmos gate=A source=VDD drain=Q width=1\n"
    with pytest.raises(NetlistError, match="undefined net"):
        parse_netlist(text)


def test_pin_without_device():
    text = ".SUBCKT X A Z Q VDD VSS\n*.PININFO A:I Z:O Q:O VDD:P VSS:G\n" \
           "MP0 Z A VDD VDD pmos w=1\nMN0 Z A VSS VSS nmos w=1\n.ENDS\n"
    with pytest.raises(NetlistError, match="connect to no device"):
        parse_netlist(text)


def test_missing_ends():
    with pytest.raises(NetlistError, match=".ENDS"):
        parse_netlist(HEAD + "MP0 Z A VDD VDD pmos w=1\n")


def test_bulk_is_ignored_and_nfin_scaled():
    nl = parse_netlist(HEAD + "MP0 Z A VDD VBB pmos nfin=4\nMN0 Z A VSS VSS nmos nfin=2\n.ENDS\n",
                       units_per_fin=2)
    assert [t.width_units for t in nl.transistors] == [2, 1]
    assert "VBB" not in nl.nets


@pytest.mark.parametrize("cell", bundled_cell_names())
def test_dump_round_trip(cell):
    nl = bundled_cell(cell)
    assert parse_netlist(dump_netlist(nl)) == nl


def test_width_sums():
    nl = bundled_cell("INV_X2")
    assert nl.width_sum(Kind.PMOS) == 2 and nl.width_sum(Kind.NMOS) == 2


def test_terminals_inverter_output():
    nt = derive_terminals(bundled_cell("INV_X1"))["ZN"]
    assert nt.source.role in ("source", "drain")
    assert nt.source not in nt.sinks
    assert {str(t) for t in nt.all} == {"MN0.drain", "MP0.drain", "pin:ZN"}


def test_terminals_two_terminal_net():
    nt = derive_terminals(bundled_cell("NAND2_X1"))["n1"]
    assert len(nt.sinks) == 1


def test_terminals_cover_all_nets():
    terms = derive_terminals(bundled_cell("DFFHQN_X1"))
    nl = bundled_cell("DFFHQN_X1")
    assert set(terms) == set(nl.nets)
    for net, nt in terms.items():
        assert set(nt.all) == set(nl.terminals_of(net))


def test_fold_splits_wide_devices():
    nl = parse_netlist(HEAD + "MP0 Z A VDD VDD pmos w=3\nMN0 Z A VSS VSS nmos w=1\n.ENDS\n")
    f = fold(nl)
    assert [t.id for t in f.transistors] == ["MP0_f0", "MP0_f1", "MP0_f2", "MN0"]
    assert all(t.width_units == 1 for t in f.transistors)
    assert f.width_sum(Kind.PMOS) == nl.width_sum(Kind.PMOS)


def test_identical_groups():
    groups = identical_groups(bundled_cell("BUF_X16").transistors)
    assert sum(len(g) for g in groups) == 48
    assert all(len(g) > 1 for g in groups)
    assert identical_groups(bundled_cell("NAND2_X1").transistors) == []


names = st.sampled_from(["A", "B", "Z", "n1", "n2"])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(list(Kind)), names, names, names, st.integers(1, 3)),
                min_size=1, max_size=6))
def test_round_trip_property(devs):
    ts = tuple(Transistor(f"M{i}", k, g, s, d, w) for i, (k, g, s, d, w) in enumerate(devs))
    used = {n for t in ts for n in (t.gate_net, t.source_net, t.drain_net)}
    nl = Netlist("P", ts, frozenset(used), {n: "inout" for n in sorted(used)[:1]}, frozenset())
    assert parse_netlist(dump_netlist(nl)) == nl
