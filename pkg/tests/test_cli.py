import csv
import json
import math

import numpy as np
import pytest

from sardkit import __version__
from sardkit.cli import main


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)

    def cloud(name, pts):
        p = tmp_path / name
        pts = np.asarray(pts, dtype=float)
        lines = [",".join(f"x{j + 1}" for j in range(pts.shape[1]))]
        lines += [",".join(repr(v) for v in row) for row in pts.tolist()]
        p.write_text("\n".join(lines) + "\n")
        return str(p)

    return {
        "dir": tmp_path,
        "write": write,
        "cloud": cloud,
        "broughton": write("broughton.json", {"vars": ["x", "y"], "components": ["x + x^2*y"]}),
        "circle": write("circlesum.json", {"vars": ["x", "y"], "components": ["x^2 + y^2"]}),
        "box": write("box.json", {"box": [[-2, 2], [-2, 2]]}),
    }


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 and out else None), err


def test_nu_command(files, capsys):
    code, rep, _ = run(capsys, "nu", "--map", files["broughton"], "--point", "1,1")
    assert code == 0
    assert rep["tool"] == "sardkit" and rep["version"] == __version__
    assert rep["result"]["nu"] == pytest.approx(math.sqrt(10))
    assert rep["result"]["kos"] == pytest.approx((1 + math.sqrt(2)) * math.sqrt(10))
    assert rep["config"]["point"] == "1,1"


def test_usage_errors(files, capsys):
    assert run(capsys, "nu", "--point", "1,1")[0] == 1
    assert run(capsys)[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "nu", "--map", files["dir"] / "missing.json", "--point", "1")[0] == 1
    code, _, err = run(capsys, "nu", "--map", files["broughton"], "--point", "1,1,1")
    assert code == 1 and "length" in err


def test_parse_errors(files, capsys):
    bad = files["write"]("bad.json", {"vars": ["x"], "components": ["x +"]})
    code, _, err = run(capsys, "nu", "--map", bad, "--point", "1")
    assert code == 2 and "parse error" in err
    notjson = files["dir"] / "notjson.json"
    notjson.write_text("{")
    assert run(capsys, "nu", "--map", notjson, "--point", "1")[0] == 2
    assert run(capsys, "parse", "--text", "x $ y")[0] == 2


def test_numeric_failure(files, capsys):
    code, _, err = run(capsys, "puiseux", "--expr", '{"op": "inv", "args": [[]]}')
    assert code == 3 and "numeric" in err
    cloud = files["cloud"]("pts.csv", [[0, 0], [1, 1]])
    assert run(capsys, "thin", "--cloud", cloud, "--k", 2, "--delta", 1e-7)[0] == 3


def test_version(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_parse_command(capsys):
    code, rep, _ = run(capsys, "parse", "--text", "x + x^2*y", "--vars", "x,y")
    assert code == 0
    assert rep["result"]["k"] == 1
    assert len(rep["result"]["jacobian"][0]) == 2


def test_k0_command_and_cloud(files, capsys):
    csv_path = files["dir"] / "w.csv"
    code, rep, _ = run(capsys, "k0", "--map", files["circle"], "--domain", files["box"],
                       "--samples", 1024, "--cloud-out", csv_path)
    assert code == 0
    clusters = rep["result"]["clusters"]
    assert len(clusters) == 1 and abs(clusters[0]["center"][0]) <= 1e-3
    assert rep["result"]["violations"] == 0
    assert rep["config"]["tol"] == 1e-6 and rep["config"]["seed"] == 0
    with open(csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x1", "x2", "f1", "nu", "scale"]
    assert len(rows) - 1 == rep["result"]["n_witnesses"]


def test_critical_command(files, capsys):
    code, rep, _ = run(capsys, "critical", "--map", files["circle"], "--domain", files["box"],
                       "--z", 0.5, "--samples", 512)
    assert code == 0
    assert rep["result"]["n_points"] > 0
    assert rep["result"]["max_nu"] < 0.5
    assert rep["result"]["value_max"][0] < 1 / 16


def test_kinf_command_small(files, capsys):
    ident = files["write"]("ident.json", {"vars": ["x", "y"], "components": ["x", "y"]})
    code, rep, _ = run(capsys, "kinf", "--map", ident, "--samples", 256, "--scales", "10,100")
    assert code == 0
    assert rep["result"]["clusters"] == []
    assert rep["config"]["i"] == 2


def test_k1_command(files, capsys):
    dom = files["write"]("half.json", {"box": [[-1, 1], [-1, 1]], "constraints": ["x"]})
    xy = files["write"]("xy.json", {"vars": ["x", "y"], "components": ["x*y"]})
    code, rep, _ = run(capsys, "k1", "--map", xy, "--domain", dom, "--samples", 256,
                       "--n-starts", 4, "--scales", "0.1,0.01")
    assert code == 0
    assert rep["result"]["kind"] == "K1"
    assert rep["result"]["violations"] == 0
    # without constraints the precondition fails
    assert run(capsys, "k1", "--map", xy, "--domain", files["box"], "--samples", 64)[0] == 3


def test_sard_command(files, capsys):
    csv_path = files["dir"] / "sard.csv"
    code, rep, _ = run(capsys, "sard", "--map", files["circle"], "--domain", files["box"],
                       "--samples", 512, "--z-schedule", "0.5,0.25", "--cloud-out", csv_path)
    assert code == 0
    assert len(rep["result"]["scores"]) == 2
    assert "_clouds" not in rep["result"]
    assert csv_path.read_text().splitlines()[0] == "x1,x2,f1,nu,scale"


def test_thin_and_dim_commands(files, capsys):
    seg = np.column_stack([np.linspace(0, 1, 300), np.zeros(300)])
    path = files["cloud"]("seg.csv", seg)
    code, rep, _ = run(capsys, "thin", "--cloud", path, "--k", 2, "--delta", 0.02, "--z", 0.1)
    assert code == 0
    assert rep["result"]["score"] <= 0.04 and rep["result"]["thin"] is True
    code, rep, _ = run(capsys, "dim", "--cloud", path)
    assert code == 0 and rep["result"]["box_dimension"] == pytest.approx(1, abs=0.2)


def test_family_command(files, capsys):
    entries = []
    for i, t in enumerate([0.4, 0.2, 0.1]):
        pts = np.column_stack([np.full(50, t), np.linspace(0, 1, 50)])
        entries.append({"t": t, "cloud": files["cloud"](f"f{i}.csv", pts)})
    manifest = files["write"]("family.json", entries)
    code, rep, _ = run(capsys, "family", "--manifest", manifest, "--k", 2, "--delta", 0.02,
                       "--z-germ", '[[1, 1]]', "--projections", 3)
    assert code == 0
    assert [f["t"] for f in rep["result"]["fibers"]] == [0.1, 0.2, 0.4]
    assert all(f["z"] == f["t"] for f in rep["result"]["fibers"])


def test_puiseux_command(capsys, tmp_path):
    expr = '{"op": "mul", "args": [[[1, 1]], {"op": "inv", "args": [[[0, 1], [1, -1]]]}]}'
    code, rep, _ = run(capsys, "puiseux", "--expr", expr, "--trunc", 5, "--t", 0.1)
    assert code == 0
    assert rep["result"]["infinitesimal"] is True
    assert rep["result"]["value_at_t"] == pytest.approx(0.1 + 0.01 + 0.001 + 0.0001)
    f = tmp_path / "e.json"
    f.write_text(expr)
    code, rep2, _ = run(capsys, "puiseux", "--expr-file", f, "--trunc", 5, "--t", 0.1)
    assert rep2["result"] == rep["result"]
    assert run(capsys, "puiseux")[0] == 1


def test_reports_byte_identical(files, capsys, tmp_path):
    argv = ["k0", "--map", files["circle"], "--domain", files["box"], "--samples", "512"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first
