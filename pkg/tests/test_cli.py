import json
from pathlib import Path

import pytest

from kwalk.cli import COMMANDS, main
from kwalk.graphs import gen_cycle, parse_graph

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def fixed_width(monkeypatch):
    monkeypatch.setenv("COLUMNS", "100")
    monkeypatch.delenv("KWALK_WORKERS", raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cycle_file(tmp_path, capsys):
    path = tmp_path / "g.edges"
    assert run(capsys, "gen", "--family", "cycle", "--n", "8", "--out", str(path))[0] == 0
    return path


def test_gen_writes_edge_list(cycle_file):
    assert parse_graph(cycle_file.read_text()) == gen_cycle(8)


def test_gen_random_family_needs_seed(capsys):
    code, _, err = run(capsys, "gen", "--family", "random_regular", "--n", "16", "--d", "3")
    assert code == 2 and "--seed" in err
    code, out, _ = run(capsys, "gen", "--family", "random_regular", "--n", "16", "--d", "3",
                       "--seed", "4")
    assert code == 0 and parse_graph(out).is_regular()


def test_gen_torus_from_n(capsys):
    code, out, _ = run(capsys, "gen", "--family", "torus", "--n", "16")
    assert code == 0 and out.startswith("16 32\n")
    assert run(capsys, "gen", "--family", "torus", "--n", "15")[0] == 2


def test_cover_json(capsys, cycle_file):
    code, out, _ = run(capsys, "cover", "--graph", str(cycle_file), "--k", "4",
                       "--trials", "1000", "--seed", "7")
    assert code == 0
    obj = json.loads(out)
    assert obj["trials"] == 1000 and obj["seed"] == 7 and obj["mean"] > 0


def test_cover_missing_seed(capsys, cycle_file):
    code, _, err = run(capsys, "cover", "--graph", str(cycle_file), "--k", "4")
    assert code == 2 and "--seed" in err


def test_unknown_flag(capsys, cycle_file):
    assert run(capsys, "cover", "--graph", str(cycle_file), "--seed", "1", "--bogus")[0] == 2


def test_unreadable_graph(capsys, tmp_path):
    code, _, err = run(capsys, "cover", "--graph", str(tmp_path / "nope"), "--seed", "1")
    assert code == 2 and "cannot read" in err
    bad = tmp_path / "bad.edges"
    bad.write_text("3 1\n0 7\n")
    code, _, err = run(capsys, "mix", "--graph", str(bad))
    assert code == 2 and "line 2" in err


def test_identical_argv_identical_output(capsys, cycle_file, tmp_path):
    argv = ["cover", "--graph", str(cycle_file), "--k", "2", "--trials", "300", "--seed", "5"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]
    assert run(capsys, *argv, "--workers", "2")[1] == run(capsys, *argv)[1]


def test_cover_trace(capsys, cycle_file, tmp_path):
    trace = tmp_path / "trace.txt"
    code, _, _ = run(capsys, "cover", "--graph", str(cycle_file), "--k", "2", "--trials", "5",
                     "--seed", "3", "--trace", str(trace))
    assert code == 0
    last = trace.read_text().splitlines()[-1].split()
    assert last[-1] == "8"


def test_hit_and_mix(capsys, cycle_file):
    code, out, _ = run(capsys, "hit", "--graph", str(cycle_file), "--exact", "--seed", "0")
    assert code == 0 and out.splitlines()[0].startswith("source,0,1")
    code, out, _ = run(capsys, "hit", "--graph", str(cycle_file), "--u", "0", "--v", "4",
                       "--trials", "200", "--seed", "2")
    assert code == 0 and json.loads(out)["trials"] == 200
    code, _, err = run(capsys, "mix", "--graph", str(cycle_file))
    assert code == 2 and "periodic" in err.lower()
    code, out, _ = run(capsys, "mix", "--graph", str(cycle_file), "--lazy")
    assert code == 0 and json.loads(out)["lazy"] is True


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds", "--name", "cycle", "--n", "100", "--k", "1000")
    lo, hi = json.loads(out)["value"]
    assert code == 0 and hi == pytest.approx(2895.3, abs=0.1)
    code, out, _ = run(capsys, "bounds", "--name", "compose", "--p-c", "0.9", "--p-h", "0.5",
                       "--k", "4", "--ell", "3")
    assert json.loads(out)["value"] == pytest.approx(0.45)
    assert run(capsys, "bounds", "--name", "grid", "--n", "1000", "--k", "4")[0] == 2
    assert run(capsys, "bounds", "--name", "kspeed", "--cover", "5")[0] == 2


def test_compose(capsys, cycle_file):
    argv = ["compose", "--graph", str(cycle_file), "--t-c", "128", "--t-h", "16", "--k", "2",
            "--ell", "2", "--trials", "1000", "--seed", "1"]
    code, out, _ = run(capsys, *argv)
    assert code == 0 and json.loads(out)["rows"][0]["holds"] is True
    argv[argv.index("--t-c") + 1] = "127"
    assert run(capsys, *argv)[0] == 2


def write_config(tmp_path, **scenario):
    cfg = {"scenarios": [{"family": "cycle", "sizes": [16], "ks": [2, 4], "trials": 100,
                          "seed": 3, **scenario}]}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_table1_exit_codes(capsys, tmp_path):
    cfg = write_config(tmp_path)
    code, out, _ = run(capsys, "table1", "--config", str(cfg))
    assert code == 0 and out.splitlines()[0].startswith("family,size,n,k")
    assert len(out.splitlines()) == 3
    code, out2, _ = run(capsys, "table1", "--config", str(cfg), "--workers", "2")
    assert out2 == out
    code, out3, _ = run(capsys, "table1", "--config", str(cfg), "--seed", "4")
    assert out3 != out
    assert run(capsys, "table1", "--config", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"scenarios": [{"family": "cycle", "sizes": [8]}]}')
    assert run(capsys, "table1", "--config", str(bad))[0] == 2


def test_scan_json(capsys, tmp_path):
    cfg = write_config(tmp_path)
    code, out, _ = run(capsys, "scan", "--config", str(cfg), "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert all("upper_ok" in r for r in rows)


def test_barbell_even(capsys):
    assert run(capsys, "barbell", "--n", "100", "--seed", "1")[0] == 2


@pytest.mark.parametrize("cmd", [None] + sorted(COMMANDS))
def test_help_golden(capsys, cmd):
    argv = ["--help"] if cmd is None else [cmd, "--help"]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    golden = GOLDEN / f"help_{cmd or 'main'}.txt"
    assert out == golden.read_text(encoding="utf-8")
