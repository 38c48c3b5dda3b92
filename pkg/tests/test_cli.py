import csv
import json

import pytest

from hadamard.cli import run


def write_points(tmp_path, space, points, weights=None, name="pts.json"):
    doc = {"space": space, "points": points}
    if weights is not None:
        doc["weights"] = weights
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def triangle(tmp_path):
    return write_points(tmp_path, "euclidean:2", [[0, 0], [1, 0], [0, 1]])


@pytest.fixture
def remark(tmp_path):
    return write_points(tmp_path, "spider:3", [{"ray": 0, "radius": 1}, {"ray": 1, "radius": 1},
                                               {"ray": 2, "radius": 5}], name="spider.json")


def test_mean_writes_document_and_trace(tmp_path, triangle, capsys):
    out, trace = tmp_path / "r.json", tmp_path / "t.csv"
    assert run(["mean", "--points", triangle, "--out", str(out), "--trace", str(trace), "--cycles", "5000"]) == 0
    doc = json.loads(out.read_text())
    assert doc["point"] == pytest.approx([1 / 3, 1 / 3], abs=1e-3)
    assert doc["iterations"] == 15000 and doc["stop_reason"] == "budget"
    assert doc["seed"] is None and doc["schedule"] == {"form": "C/(k+1)", "C": 1.0}
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["step", "component_index", "lambda", "t_coefficient", "objective", "distance_moved"]
    assert len(rows) == 15002
    assert "objective" in capsys.readouterr().out


def test_spider_mean_and_median(remark, tmp_path):
    out = tmp_path / "m.json"
    assert run(["mean", "--points", remark, "--cycles", "5000", "--out", str(out)]) == 0
    p = json.loads(out.read_text())["point"]
    assert p["ray"] == 2 and abs(p["radius"] - 1) <= 1e-2
    assert run(["median", "--points", remark, "--cycles", "5000", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["point"]["radius"] <= 1e-2 and doc["objective"] == pytest.approx(7 / 3, abs=1e-2)


def test_random_run_is_deterministic(triangle, tmp_path):
    docs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert run(["mean", "--points", triangle, "--algo", "random", "--steps", "5000", "--seed", "7",
                    "--out", str(out)]) == 0
        docs.append(out.read_text())
    assert docs[0] == docs[1]
    assert json.loads(docs[0])["seed"] == 7


def test_weights_flag_overrides(triangle, tmp_path):
    out = tmp_path / "w.json"
    assert run(["mean", "--points", triangle, "--weights", "2,1,1", "--cycles", "5000", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["point"] == pytest.approx([0.25, 0.25], abs=1e-3)


def test_lln_command(tmp_path, triangle):
    out = tmp_path / "l.json"
    assert run(["lln", "--points", triangle, "--steps", "100", "--seed", "3", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["variant"] == "lln" and doc["iterations"] == 100 and doc["schedule"] is None


def test_tree_mean_of_identical_trees(tmp_path):
    path = tmp_path / "t.nwk"
    path.write_text("# three copies\n((A:1,B:1):0.5,(C:1,D:1):0.7);\n" * 3)
    out = tmp_path / "o.json"
    assert run(["mean", "--trees", str(path), "--cycles", "20", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["space"] == "bhv:4" and doc["objective"] <= 1e-12


def test_geodesic_round_trip(tmp_path, triangle):
    pts = write_points(tmp_path, "euclidean:2", [[0, 0], [2, 4]], name="two.json")
    for t, expect in ((0.0, [0, 0]), (0.25, [0.5, 1.0]), (1.0, [2, 4])):
        out = tmp_path / "g.json"
        assert run(["geodesic", "--points", pts, "--t", str(t), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["point"] == pytest.approx(expect)
    assert run(["geodesic", "--points", triangle, "--t", "0.5"]) == 2


def test_flow(tmp_path):
    pts = write_points(tmp_path, "euclidean:1", [[0.0]])
    out = tmp_path / "f.json"
    assert run(["flow", "--points", pts, "--t", "1", "--k", "10000", "--start", "1", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["point"][0] == pytest.approx(0.1353, abs=1e-3)


def test_feasibility(tmp_path):
    out = tmp_path / "f.json"
    args = ["feasibility", "--space", "euclidean:2", "--center", "0,0", "--radius", "1",
            "--center", "1.5,0", "--radius", "1", "--start", "0.7,3", "--out", str(out)]
    assert run(args) == 0
    doc = json.loads(out.read_text())
    assert doc["feasible"] and doc["max_set_distance"] <= 1e-6
    assert run(args + ["--algo", "random", "--seed", "4"]) == 0
    far = ["feasibility", "--space", "euclidean:1", "--center", "0", "--radius", "1",
           "--center", "5", "--radius", "1"]
    assert run(far) == 3


def test_verify(tmp_path, triangle, remark):
    out = tmp_path / "v.json"
    assert run(["verify", "--points", triangle, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"] is True
    assert run(["verify", "--points", remark]) == 0
    assert run(["verify", "--points", triangle, "--cycles", "1"]) == 1
    assert run(["verify", "--points", remark, "--algo", "lln", "--replicates", "100"]) == 0


def test_budget_exit_code(triangle):
    assert run(["mean", "--points", triangle, "--cycles", "3", "--tol", "1e-12"]) == 3
    assert run(["mean", "--points", triangle, "--cycles", "100000", "--tol", "1e-4"]) == 0


@pytest.mark.parametrize("argv", [
    ["mean"],
    ["mean", "--points", "/nonexistent.json"],
    ["mean", "--points", "PTS", "--space", "spider:3"],
    ["mean", "--points", "PTS", "--weights", "1,2"],
    ["mean", "--points", "PTS", "--weights", "1,-1,1"],
    ["mean", "--points", "PTS", "--cycles", "0"],
    ["median", "--points", "PTS", "--algo", "lln"],
    ["nonsense"],
])
def test_input_errors_exit_2(argv, triangle, capsys):
    argv = [triangle if a == "PTS" else a for a in argv]
    assert run(argv) == 2
    assert "error" in capsys.readouterr().err


def test_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["mean", "--points", str(bad)]) == 2
