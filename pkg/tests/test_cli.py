import json

import pytest

from mvcheck import graph as graph_module
from mvcheck.cli import main

from conftest import H1_TEXT, H1_WORKLOAD


@pytest.fixture
def fx(fixtures_dir):
    return lambda name: str(fixtures_dir / name)


def run_json(capsys, *argv):
    code = main([*argv, "--format", "json"])
    return code, json.loads(capsys.readouterr().out)


def test_check_h1_json(capsys, fx):
    code, out = run_json(capsys, "check", fx("H1.hist"))
    assert code == 0
    assert out["schema_version"] == 1
    r = out["report"]
    assert (r["valid"], r["legal"], r["multi_versioned"], r["co_opaque"], r["mvc_opaque"], r["opaque"]) == (
        True, False, True, False, True, True)


def test_check_text(capsys, fx):
    assert main(["check", fx("H2.hist")]) == 0
    out = capsys.readouterr().out
    assert "mvc-opaque: no" in out and "opaque: yes" in out


@pytest.mark.parametrize("name, cls, code", [
    ("H1.hist", "mvc-opaque", 0),
    ("H1.hist", "co-opaque", 1),
    ("H2.hist", "opaque", 0),
    ("H2.hist", "mvc-opaque", 1),
    ("invalid.hist", "valid", 1),
])
def test_check_expect(capsys, fx, name, cls, code):
    assert main(["check", fx(name), "--expect", cls]) == code


def test_parse_error_exits_2(capsys, fx):
    assert main(["check", fx("garbage.hist")]) == 2
    assert "1:1: read requires a value" in capsys.readouterr().err


def test_missing_file_exits_2(capsys, tmp_path):
    assert main(["check", str(tmp_path / "nope.hist")]) == 2


def test_graph_dot_and_figure(capsys, fx, tmp_path):
    dot, fig = tmp_path / "g.dot", tmp_path / "g.png"
    assert main(["graph", fx("H2.hist"), "--dot", str(dot), "--figure", str(fig)]) == 0
    assert "cyclic: T2 -> T3 -> T2" in capsys.readouterr().out
    assert dot.read_text().startswith("digraph mvcg {")
    assert fig.stat().st_size > 1000


def test_graph_invalid_exits_1(capsys, fx):
    assert main(["graph", fx("invalid.hist")]) == 1


def test_witness(capsys, fx):
    assert main(["witness", fx("H4.hist")]) == 0
    assert capsys.readouterr().out.strip() == "r2(x,0) c2 w1(x,5) c1"
    assert main(["witness", fx("H2.hist")]) == 0
    assert capsys.readouterr().out.strip() == "none"


def test_witness_from_stdin(capsys, monkeypatch):
    import io
    monkeypatch.setattr("sys.stdin", io.StringIO(H1_TEXT))
    code, out = run_json(capsys, "witness", "-")
    assert code == 0 and out["witness"] == "r1(x,0) r1(y,0) c1 w2(x,10) w2(y,10) c2"


def test_simulate(capsys, tmp_path):
    wl = tmp_path / "h1.workload"
    wl.write_text(H1_WORKLOAD)
    emit, fig = tmp_path / "out.hist", tmp_path / "sim.png"
    code, out = run_json(capsys, "simulate", str(wl), "--emit", str(emit), "--gc", "--figure", str(fig))
    assert code == 0
    assert out["history"] == H1_TEXT
    assert emit.read_text() == H1_TEXT + "\n"
    assert out["stats"]["version_skips"] == 1
    assert out["gc"]["removed"] == [1]
    assert fig.exists()


def test_simulate_bad_workload(capsys, tmp_path):
    wl = tmp_path / "bad.workload"
    wl.write_text("begin 1\nw 1 x\n")
    assert main(["simulate", str(wl)]) == 2
    assert "2:1: write requires a value" in capsys.readouterr().err
    wl.write_text("begin 1\nbegin 1\n")
    assert main(["simulate", str(wl)]) == 2


def test_simulate_incident_exits_3(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(graph_module.MVCG, "try_add_edges", lambda self, batch: (False, [0, 0]))
    wl = tmp_path / "r.workload"
    wl.write_text("begin 1\nr 1 x\ntryc 1\n")
    assert main(["simulate", str(wl)]) == 3
    assert '"incident": true' in capsys.readouterr().err


def test_fuzz_clean(capsys, tmp_path):
    fig = tmp_path / "fuzz.png"
    code, out = run_json(capsys, "fuzz", "--count", "200", "--seed", "1", "--repro-dir", str(tmp_path / "r"),
                         "--figure", str(fig))
    assert code == 0
    assert out["summary"]["generated"] == 200
    assert out["summary"]["discrepancies"] == []
    assert fig.exists()
    assert not (tmp_path / "r").exists()


def test_fuzz_zero(capsys):
    assert main(["fuzz", "--count", "0"]) == 0


def test_fuzz_usage(capsys):
    assert main(["fuzz", "--count", "-1"]) == 2


def test_fuzz_catches_a_broken_decider(capsys, tmp_path, monkeypatch):
    # a graph decider that forgets every edge thinks everything is serializable
    monkeypatch.setattr("mvcheck.oracles.build_mvcg", lambda h: graph_module.MVCG([0, *h.txns]))
    repro = tmp_path / "repro"
    assert main(["fuzz", "--count", "300", "--seed", "3", "--repro-dir", str(repro)]) == 1
    files = sorted(repro.glob("*.hist"))
    assert files
    assert "graph-vs-bruteforce" in files[0].name or "witness" in files[0].name
    text = files[0].read_text().splitlines()
    assert text[0].startswith("# ")


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2
