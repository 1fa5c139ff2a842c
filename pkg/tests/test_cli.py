import json

import numpy as np
import pytest

from stabcert.cli import main
from stabcert.fem import FemConfig, assemble_fem
from stabcert.operator import AffineForm, save_form
from stabcert.theta import ThetaMap


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def value(out, key):
    for line in out.splitlines():
        if line.startswith(key):
            return float(line.split("=")[1])
    raise AssertionError(f"{key} not in output")


def test_alpha_demo(capsys):
    code, out, _ = run(capsys, "alpha", "--demo-fem", "180", "--mu", "0,0")
    assert code == 0
    assert value(out, "alpha") == pytest.approx(1.0, abs=1e-10)
    code, out, _ = run(capsys, "alpha", "--demo-fem", "180", "--mu", "12.0908,0")
    assert abs(value(out, "alpha")) <= 2e-3


def test_alpha_op_file_psi(capsys, tmp_path):
    f = AffineForm((np.eye(2), np.diag([1.0, -1.0])), ThetaMap.from_strings(["1", "mu1"], 1), np.eye(2))
    path = tmp_path / "op.json"
    save_form(f, path)
    code, out, _ = run(capsys, "alpha", "--op", str(path), "--psi", "1,0.25")
    assert code == 0
    assert value(out, "alpha") == pytest.approx(0.75)


def test_certify_exit_codes(capsys, tmp_path):
    out_file = tmp_path / "c.json"
    code, out, _ = run(capsys, "certify", "--demo-fem", "60", "--domain", "0:10,0:2", "-o", str(out_file))
    assert code == 0 and "stable" in out
    doc = json.loads(out_file.read_text())
    assert doc["format_version"] == 1 and doc["kind"] == "stability"
    assert doc["tool_version"] and len(doc["operator_hash"]) == 64
    assert doc["config"]["domain"] == {"lower": [0.0, 0.0], "upper": [10.0, 2.0]}
    code, out, _ = run(capsys, "certify", "--demo-fem", "60", "--domain", "0:30,0:0")
    assert code == 2 and "witness" in out
    code, _, _ = run(capsys, "certify", "--demo-fem", "60", "--domain", "0:10,0:2", "--tol", "5")
    assert code == 3


def test_mesh_query(capsys, tmp_path):
    mesh = tmp_path / "m.json"
    code, _, _ = run(capsys, "mesh", "--demo-fem", "60", "--domain", "0:30,0:2", "--tol", "0.05", "-o", str(mesh))
    assert code == 0
    code, out, _ = run(capsys, "query", "--mesh", str(mesh), "--mu", "0,0")
    assert code == 0 and value(out, "lower bound") == pytest.approx(1.0, abs=1e-10)
    code, _, err = run(capsys, "query", "--mesh", str(mesh), "--mu", "40,1")
    assert code == 4 and "outside" in err


def test_mesh_budget_partial(capsys, tmp_path):
    mesh = tmp_path / "m.json"
    code, _, err = run(capsys, "mesh", "--demo-fem", "60", "--domain", "0:30,0:2", "--tol", "1e-5",
                       "--budget", "6", "-o", str(mesh))
    assert code == 3 and "partial" in err
    assert json.loads(mesh.read_text())["payload"]["converged"] is False


def test_mesh_scm_query(capsys, tmp_path):
    mesh = tmp_path / "m.json"
    code, _, _ = run(capsys, "mesh", "--demo-fem", "60", "--domain", "0:30,0:2", "--use-scm",
                     "--scm-vertices", "-o", str(mesh))
    assert code == 0
    code, out, _ = run(capsys, "query", "--mesh", str(mesh), "--mu", "6,1")
    assert "scm lower bound" in out


def test_outputs_are_byte_identical(capsys, tmp_path):
    path = tmp_path / "m.json"
    blobs = []
    for _ in range(2):
        run(capsys, "mesh", "--demo-fem", "60", "--domain", "0:30,0:2", "--use-scm", "-o", str(path))
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


def test_lyapunov_command(capsys, tmp_path):
    csv_path, js = tmp_path / "cov.csv", tmp_path / "l.json"
    code, out, _ = run(capsys, "lyapunov", "--demo-fem", "180", "--anchor", "20,0", "--anchor", "28.25,0",
                       "--domain", "0:30,0", "--csv", str(csv_path), "-o", str(js))
    assert code == 0 and "uncovered: 0" in out
    assert len(csv_path.read_text().splitlines()) == 62
    doc = json.loads(js.read_text())
    assert doc["kind"] == "lyapunov" and len(doc["payload"]) == 2
    code, out, _ = run(capsys, "lyapunov", "--demo-fem", "180", "--anchor", "20,0", "--anchor", "28.25,0",
                       "--domain", "0:30,-0.4")
    assert code == 3 and "uncovered mu" in out


def test_lyapunov_symmetric_path(capsys, tmp_path):
    X = np.diag([1.0, 2.0])
    f = AffineForm((X, -X), ThetaMap.from_strings(["1", "mu1"], 1), X, X)
    path = tmp_path / "op.json"
    save_form(f, path)
    code, out, _ = run(capsys, "lyapunov", "--op", str(path), "--domain", "0:0.5", "--grid", "3")
    assert code == 0 and "symmetric operator verdicts" in out


def test_lyapunov_hull(capsys):
    code, out, _ = run(capsys, "lyapunov", "--demo-fem", "60", "--domain", "0:30,0", "--grid", "5",
                       "--hull", "0,0;0,2;12,0;17,2")
    assert "proven=True" in out


def test_scenario_csv(capsys, tmp_path):
    path = tmp_path / "s.csv"
    code, _, _ = run(capsys, "scenario", "--demo-fem", "60", "--mu2", "2", "--anchor", "20,0",
                     "--anchor", "28.25,0", "--grid", "7", "-o", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "mu1,alpha,alpha_phi1,alpha_phi2" and len(lines) == 8


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["alpha", "--mu", "0,0"],
    ["alpha", "--demo-fem", "10", "--mu", "a,b"],
    ["certify", "--demo-fem", "10", "--domain", "0:1"],
    ["mesh", "--demo-fem", "10", "--scm-vertices", "-o", "x.json"],
    ["query", "--mesh", "/nonexistent/m.json", "--mu", "0,0"],
    ["certify", "--op", "/nonexistent/op.json", "--domain", "0:1"],
])
def test_usage_and_io_errors_exit_one(capsys, argv):
    with pytest.raises(SystemExit) as info:
        raise SystemExit(main(argv))
    assert info.value.code == 1
