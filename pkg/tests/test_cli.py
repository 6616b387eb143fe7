import io as stdio
import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from tljmod.cli import run_cli
from tljmod.io import SCHEMAS, load_document, parse

DATA = Path(__file__).parent / "data"
REPORT = jsonschema.Draft202012Validator(SCHEMAS["report"])


def run(*argv):
    out, err = stdio.StringIO(), stdio.StringIO()
    code = run_cli([str(a) for a in argv], out, err)
    d = parse(out.getvalue())
    assert d.kind == "report"
    REPORT.validate(d.payload)
    assert d.payload["ok"] == (code == 0)
    if code != 0:
        assert d.payload["violations"]
    assert err.getvalue().startswith("tljmod ") and err.getvalue().count("\n") == 1
    return code, d.payload, out.getvalue()


@pytest.fixture
def lam(tmp_path):
    path = tmp_path / "lambda1.json"
    assert run("gen", "--family", "lambda1", "-o", path)[0] == 0
    return path


def test_roundtrip_lambda1(lam):
    code, rep, _ = run("roundtrip", "--fair-graph", lam)
    assert code == 0
    wit = rep["data"]["witness"]
    assert wit["type"] == "iso" and len(wit["vertex_map"]) == 6 and len(wit["edge_map"]) == 26


def test_validate_and_fair(lam, tmp_path):
    g = tmp_path / "g.json"
    (g).write_bytes((Path(__file__).parents[1] / "src/tljmod/data/gamma1.json").read_bytes())
    assert run("validate", "--gamma", g)[0] == 0
    assert run("fair", "--fair-graph", lam)[0] == 0


def test_balance_obstruction():
    code, rep, _ = run("balance", "--fair-graph", DATA / "unbalanced_two_loops.json")
    assert code == 1
    assert {v["code"] for v in rep["violations"]} == {"UNMATCHED_WEIGHT_GROUP"}
    assert sorted(i for v in rep["violations"] for i in v["ids"]) == ["l1", "l2"]
    assert run("build-solution", "--fair-graph", DATA / "unbalanced_two_loops.json", "-o", "/dev/null")[0] == 1


def test_build_classify_iso(tmp_path):
    s = tmp_path / "s.json"
    back = tmp_path / "back.json"
    assert run("build-solution", "--fair-graph", DATA / "a3.json", "-o", s)[0] == 0
    assert run("classify", "--solution", s, "-o", back)[0] == 0
    code, rep, _ = run("iso", "--a", DATA / "a3.json", "--b", back)
    assert code == 0 and rep["data"]["witness"]["type"] == "iso"
    code, rep, _ = run("iso", "--a", DATA / "a3.json", "--b", DATA / "unbalanced_two_loops.json")
    assert code == 2  # different base graphs


def test_eval_loop_is_delta(tmp_path):
    s = tmp_path / "s.json"
    run("build-solution", "--fair-graph", DATA / "a3.json", "-o", s)
    out = tmp_path / "r.json"
    code, rep, _ = run("eval", "--solution", s, "--morphism", DATA / "loop.json", "-o", out)
    assert code == 0
    blocks = rep["data"]["operator"]["blocks"]
    assert len(blocks) == 3
    for b in blocks:
        (((re, im),),) = b["matrix"]
        assert re == pytest.approx(math.sqrt(2), abs=1e-12) and im == 0
    assert load_document(str(out), "report").payload["data"] == rep["data"]


def test_mw(tmp_path):
    code, rep, _ = run("mw", "--fair-graph", DATA / "a3.json")
    assert code == 0 and rep["data"]["witness"]["type"] == "dimension"
    tvr = tmp_path / "tvr.json"
    run("gen", "--family", "two-vertex-reciprocal", "--params", "a=2", "-o", tvr)
    code, rep, _ = run("mw", "--fair-graph", tvr)
    assert code == 1 and rep["violations"][0]["code"] == "NOT_MW_TYPE"
    assert rep["data"]["witness"]["product"] == pytest.approx(0.25)


def test_equiv(tmp_path, lam):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("gen", "--family", "random-solution", "--gamma", DATA / "gamma_a3.json", "--params", "seed=1", "-o", a)
    run("gen", "--family", "random-solution", "--gamma", DATA / "gamma_a3.json", "--params", "seed=2", "-o", b)
    code, rep, _ = run("equiv", "--a", a, "--b", b, "--fuzz", 3)
    assert code == 0 and rep["data"]["equivalent"] and rep["data"]["fuzz"]["failures"] == 0


def test_determinism(lam, tmp_path):
    outs = {run("roundtrip", "--fair-graph", lam)[2] for _ in range(3)}
    assert len(outs) == 1
    files = []
    for k in range(2):
        f = tmp_path / f"r{k}.json"
        run("gen", "--family", "random-solution", "--gamma", DATA / "gamma_a3.json", "--params", "seed=4", "-o", f)
        files.append(f.read_bytes())
    assert files[0] == files[1]


def test_seed_override(tmp_path, monkeypatch):
    a, b, c = (tmp_path / n for n in ("a.json", "b.json", "c.json"))
    gamma = DATA / "gamma_a3.json"
    run("gen", "--family", "random-solution", "--gamma", gamma, "--params", "seed=1", "-o", a)
    run("gen", "--family", "random-solution", "--gamma", gamma, "--params", "seed=2", "-o", b)
    monkeypatch.setenv("TLJ_SEED", "1")
    run("gen", "--family", "random-solution", "--gamma", gamma, "--params", "seed=2", "-o", c)
    assert a.read_bytes() != b.read_bytes() and a.read_bytes() == c.read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        [],
        ["fair"],
        ["fair", "--fair-graph", "/nonexistent.json"],
        ["fair", "--fair-graph", str(DATA / "a3.json"), "--tol", "-1"],
        ["gen", "--family", "a-path", "-o", "/dev/null"],
        ["gen", "--family", "a-path", "--params", "n", "-o", "/dev/null"],
        ["gen", "--family", "two-vertex-reciprocal", "--params", "a=1", "--gamma", str(DATA / "gamma_a3.json"), "-o", "/dev/null"],
        ["eval", "--solution", str(DATA / "a3.json"), "--morphism", str(DATA / "loop.json")],
    ],
)
def test_input_errors_exit_2(argv):
    assert run(*argv)[0] == 2


def test_malformed_document(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "fair_graph", "version": 1, "payload": {"gamma": "g.json", "vertices": [], "edges": [], "x": 1}}')
    code, rep, _ = run("fair", "--fair-graph", bad)
    assert code == 2 and rep["violations"][0]["code"] == "SCHEMA_VIOLATION"


def test_console_entry_point():
    p = subprocess.run([sys.executable, "-m", "tljmod", "mw", "--fair-graph", str(DATA / "a3.json")], capture_output=True)
    assert p.returncode == 0 and json.loads(p.stdout)["payload"]["ok"]
