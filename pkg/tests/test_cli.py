import pytest

from cellforge.cli import RunConfig, StageError, main, parse_gear_ratio
from cellforge.model.ir import model_from_text


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_grstudy(capsys):
    rc, out, _ = run(capsys, "grstudy", "--max-width", "7")
    lines = out.splitlines()
    assert rc == 0 and lines[0].startswith("gr")
    w7 = {tuple(l.split()[:2]): int(l.split()[8]) for l in lines[1:]}
    assert w7 == {("45:45", "0"): 6, ("45:30", "0"): 10, ("45:30", "15"): 10,
                  ("45:27", "0"): 11, ("45:27", "9"): 12, ("45:27", "18"): 11}


@pytest.mark.parametrize("text, mp3", [("3:2", 30), ("45:30", 30), ("1:1", 45), ("5:3", 27)])
def test_gear_ratio_parsing(text, mp3):
    assert parse_gear_ratio(text, 45) == mp3


@pytest.mark.parametrize("text", ["3-2", "0:1", "4:7"])
def test_gear_ratio_rejects(text):
    with pytest.raises(StageError):
        parse_gear_ratio(text, 45)


def gen(capsys, out_dir):
    return run(capsys, "gen", "--netlist", "INV_X1", "--gr", "3:2", "--no-timing", "--out-dir", str(out_dir))


def test_gen_writes_bundles_and_is_byte_stable(capsys, tmp_path):
    rc, out, _ = gen(capsys, tmp_path / "a")
    assert rc == 0
    assert out.count("OPTIMAL") == 2 and "clean" in out
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["INV_X1_45-30_d0.layout", "INV_X1_45-30_d0.svg", "INV_X1_45-30_d15.layout",
                     "INV_X1_45-30_d15.svg", "summary.txt"]
    rc2, out2, _ = gen(capsys, tmp_path / "b")
    assert rc2 == 0 and out2 == out
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_drc_and_render(capsys, tmp_path):
    gen(capsys, tmp_path)
    lay = tmp_path / "INV_X1_45-30_d0.layout"
    rc, out, _ = run(capsys, "drc", str(lay))
    assert rc == 0 and out.strip().endswith("0 violation(s)")
    bad = tmp_path / "bad.layout"
    bad.write_text(lay.read_text().replace("end\n", "segment 4 72 0 30 A\nend\n"))
    rc, out, _ = run(capsys, "drc", str(bad))
    assert rc == 1 and "floating" in out
    rc, _, _ = run(capsys, "render", str(lay), "-o", str(tmp_path / "x.svg"))
    assert rc == 0 and (tmp_path / "x.svg").read_text() == (tmp_path / "INV_X1_45-30_d0.svg").read_text()


def test_batch_counts_bundles(capsys, tmp_path):
    rc, out, _ = run(capsys, "batch", "--netlist", "INV_X1", "--netlist", "INV_X2", "--gr", "1:1", "--gr", "3:2",
                     "--no-timing", "--out-dir", str(tmp_path))
    assert rc == 0
    # two cells, three variants each (1:1 has one offset, 3:2 has two)
    assert len(list(tmp_path.glob("*.layout"))) == 6
    assert len(out.strip().splitlines()) == 1 + 6


def test_cluster_dump(capsys):
    rc, out, _ = run(capsys, "cluster-dump", "--netlist", "INV_X2")
    assert rc == 0 and out.startswith("cell INV_X2 kmin 2 kmax 4 seed 0 clusters 2")


def test_emit_model(capsys, tmp_path):
    rc, _, _ = run(capsys, "emit-model", "--netlist", "INV_X1", "--gr", "3:2", "--offset", "15",
                   "-o", str(tmp_path / "m.txt"), "--dump-grid", str(tmp_path / "g.txt"))
    assert rc == 0
    m = model_from_text((tmp_path / "m.txt").read_text())
    assert m.num_vars > 0 and m.objective
    assert (tmp_path / "g.txt").read_text().splitlines()[3] == "C2 0 15 45 75 90"


@pytest.mark.parametrize("argv, stage", [
    (["gen", "--netlist", "NO_SUCH_CELL"], "parse"),
    (["gen", "--netlist", "INV_X1", "--offset", "x"], "config"),
    (["emit-model", "--netlist", "INV_X1", "--gr", "3:2", "--offset", "7"], "encode"),
    (["ablate", "--netlist", "INV_X1", "--sets", ""], "config"),
    (["drc", "/no/such/file.layout"], "parse"),
])
def test_stage_errors(capsys, argv, stage):
    rc, _, err = run(capsys, *argv)
    assert rc == 2 and err.startswith(f"error [{stage}]")


def test_seed_env_override(monkeypatch, capsys):
    monkeypatch.setenv("CELLFORGE_SEED", "7")
    assert RunConfig(seed=1).effective_seed() == 7
    rc, out, _ = run(capsys, "cluster-dump", "--netlist", "INV_X2", "--seed", "1")
    assert rc == 0 and " seed 7 " in out.splitlines()[0]
    monkeypatch.setenv("CELLFORGE_SEED", "abc")
    rc, _, err = run(capsys, "cluster-dump", "--netlist", "INV_X2")
    assert rc == 2 and "CELLFORGE_SEED" in err


def test_ablate_small_cell(capsys, tmp_path):
    rc, out, _ = run(capsys, "ablate", "--netlist", "INV_X1", "--gr", "1:1", "--sets", "ae", "--out-dir", str(tmp_path))
    assert rc == 0 and "identical (CW, WL) across sets" in out
    assert (tmp_path / "INV_X1_ablation.csv").exists()


def test_summary_normalizes_to_one_to_one(capsys):
    rc, out, _ = run(capsys, "gen", "--netlist", "INV_X1", "--gr", "1:1", "--gr", "3:2", "--offset", "0",
                     "--no-timing")
    rows = [l.split() for l in out.splitlines()[1:]]
    assert rc == 0 and [r[5] for r in rows] == ["1.000", "0.667"]
