import json
import subprocess
import sys

import pytest

from support import TINY1
from transversal.cli import main
from transversal.cover import CoverInstance


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "tiny1.json"
    path.write_text(TINY1.to_json())
    return path


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_stats(tiny, capsys):
    code, out, _ = run(["stats", tiny], capsys)
    obj = json.loads(out)
    assert code == 0
    assert obj["max_degree"] == 2 and obj["max_avg_colour_degree"] == "3/2" and obj["mu"] == 2


def test_validate(tiny, capsys):
    assert run(["validate", tiny], capsys)[0] == 0


def test_solve_prints_colouring(tiny, capsys):
    code, out, _ = run(["solve", tiny, "--engine", "exact"], capsys)
    assert code == 0 and json.loads(out) == [[0, 1], [1, 1]]


def test_solve_exact_and_verify(tiny, tmp_path, capsys):
    sol = tmp_path / "sol.json"
    code, out, _ = run(["solve", tiny, "--engine", "exact", "--out", sol], capsys)
    assert code == 0
    assert json.loads(sol.read_text()) == [[0, 1], [1, 1]]
    code, out, _ = run(["verify", tiny, sol], capsys)
    assert code == 0 and json.loads(out)["independent_transversal"] is True


def test_verify_rejects_conflicting_colouring(tiny, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[[0, 0], [1, 0]]")
    code, out, _ = run(["verify", tiny, bad], capsys)
    obj = json.loads(out)
    assert code == 1 and obj["independent_transversal"] is False and obj["conflicts"]


def test_seed_required(tiny, capsys):
    code, _, err = run(["solve", tiny, "--engine", "lll"], capsys)
    assert code == 2 and "error" in json.loads(err.strip().splitlines()[-1])
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--family", "egl", "--n", "4", "--k", "2"])
    assert exc.value.code == 2


def test_generate_round_trip_and_reproducible(tmp_path, capsys):
    args = ["generate", "--family", "matching_cover", "--parts", "15", "--list-size", "6", "--seed", "4"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(args + ["--out", a], capsys)[0] == 0
    assert run(args + ["--out", b], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    inst = CoverInstance.from_json(a.read_text())
    assert inst.to_json() == a.read_text()


def test_pipeline_solve_reproducible(tmp_path, capsys):
    inst = tmp_path / "sc.json"
    run(["generate", "--family", "single_conflict", "--parts", "40", "--degree", "300", "--list-size", "20",
         "--seed", "2", "--out", inst], capsys)
    outs = []
    for name in ("r1.json", "r2.json"):
        code, out, _ = run(["solve", inst, "--engine", "pipeline", "--seed", "9", "--epsilon", "0.25",
                            "--report", tmp_path / name], capsys)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    report = json.loads((tmp_path / "r1.json").read_text())
    assert report["outcome"] == "found" and report["stages"][-1]["name"] == "finisher"


def test_nibble_summary_and_csv(tiny, tmp_path, capsys):
    csv = tmp_path / "trials.csv"
    code, out, _ = run(["nibble", tiny, "--seed", "1", "--p", "0.5", "--d", "2", "--trials", "200", "--out", csv], capsys)
    assert code == 0 and "useable_mean" in json.loads(out)
    header = csv.read_text().splitlines()[0]
    assert header == "trial,part,useable_cols,expected_useable,bad_events,omega_star"


def test_reduce_writes_trace(tmp_path, capsys):
    inst = tmp_path / "m.json"
    run(["generate", "--family", "matching_cover", "--parts", "30", "--list-size", "40", "--pair-prob", "0.5",
         "--seed", "3", "--out", inst], capsys)
    trace = tmp_path / "trace.json"
    code, _, _ = run(["reduce", inst, "--epsilon", "0.2", "--gamma", "0.5", "--seed", "1", "--trace", trace], capsys)
    assert code == 0 and "steps" in json.loads(trace.read_text())


def test_bad_instance_file(tmp_path, capsys):
    bad = tmp_path / "x.json"
    bad.write_text('{"parts": [["a"]], "base_edges": [[0, 0, 1]], "conflicts": []}')
    assert run(["stats", bad], capsys)[0] == 2


def test_module_entry_point(tiny):
    proc = subprocess.run([sys.executable, "-m", "transversal", "verify", str(tiny), "/dev/null"],
                          capture_output=True, text=True)
    assert proc.returncode in (1, 2)
