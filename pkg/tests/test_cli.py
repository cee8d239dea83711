import json
import subprocess
import sys

import numpy as np
import pytest

from ranksparse.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from ranksparse.ensembles import EnsembleSpec, random_lowrank, random_sparse
from ranksparse.matcore import read_matrix, write_matrix


@pytest.fixture
def pair(tmp_path):
    spec = EnsembleSpec(25, 25, 2, 0)
    a, b = random_sparse(spec), random_lowrank(spec)
    write_matrix(a, tmp_path / "A.mtx")
    write_matrix(b, tmp_path / "B.mtx")
    write_matrix(a + b, tmp_path / "C.mtx")
    return a, b, tmp_path


def test_decompose_writes_three_files(pair):
    a, b, d = pair
    code = main(["decompose", "--input", str(d / "C.mtx"), "--gamma", "0.315",
                 "--out-sparse", str(d / "Ah.mtx"), "--out-lowrank", str(d / "Bh.mtx"),
                 "--report", str(d / "r.json")])
    assert code == EXIT_OK
    rep = json.loads((d / "r.json").read_text())
    assert rep["converged"] and rep["gamma_used"] == 0.315
    np.testing.assert_allclose(read_matrix(d / "Ah.mtx"), a, atol=1e-5)
    np.testing.assert_allclose(read_matrix(d / "Bh.mtx"), b, atol=1e-5)


def test_analyze_json(pair, capsys):
    _, _, d = pair
    assert main(["analyze", "--sparse", str(d / "A.mtx"), "--lowrank", str(d / "B.mtx"), "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["rank"] == 2 and rep["deg_min"] <= rep["mu"] <= rep["deg_max"]


def test_analyze_table(pair, capsys):
    _, _, d = pair
    assert main(["analyze", "--sparse", str(d / "A.mtx"), "--lowrank", str(d / "B.mtx")]) == 0
    assert "mu" in capsys.readouterr().out


def test_certify(pair, capsys):
    _, _, d = pair
    assert main(["certify", "--sparse", str(d / "A.mtx"), "--lowrank", str(d / "B.mtx"),
                 "--gamma", "0.315", "--interval"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["certificate"]["verdict"] == "pass"
    assert out["certified_interval"]["valid"]


def test_phase(tmp_path):
    args = ["phase", "--n", "8", "--m", "2:30:62", "--k", "1:1:2", "--trials", "2", "--seed", "7",
            "--out", str(tmp_path / "p.csv"), "--pgm", str(tmp_path / "p.pgm")]
    assert main(args) == 0
    first = (tmp_path / "p.csv").read_bytes()
    assert first.startswith(b"m,k,success_prob")
    assert b"\r" not in first
    assert (tmp_path / "p.pgm").read_text().startswith("P2\n3 2\n255\n")
    assert main(args) == 0
    assert (tmp_path / "p.csv").read_bytes() == first


def test_gamma_sweep(pair):
    a, b, d = pair
    code = main(["gamma-sweep", "--input", str(d / "C.mtx"), "--t", "0.02:0.01:0.4",
                 "--sparse", str(d / "A.mtx"), "--lowrank", str(d / "B.mtx"),
                 "--out", str(d / "s.csv"), "--report", str(d / "s.json")])
    assert code == 0
    lines = (d / "s.csv").read_text().splitlines()
    assert lines[0] == "t,diff_t,tol_t" and len(lines) == 40
    assert "plateaus" in json.loads((d / "s.json").read_text())


def test_rigidity(capsys):
    assert main(["rigidity", "--n", "30", "--epsilon", "0.1", "--seed", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["k_target"] == 3 and "certified" in out


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["decompose", "--input", "x.mtx"],
    ["decompose", "--input", "x.mtx", "--gamma", "-1"],
    ["analyze", "--sparse", "a", "--lowrank", "b", "--unknown-flag"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_bad_grid(tmp_path):
    assert main(["phase", "--m", "1:2", "--out", str(tmp_path / "p.csv")]) == EXIT_USAGE


def test_missing_file(tmp_path):
    assert main(["decompose", "--input", str(tmp_path / "nope.mtx"), "--gamma", "1"]) == EXIT_USAGE


def test_parse_error(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("1,2\n3,zz\n")
    assert main(["decompose", "--input", str(tmp_path / "bad.csv"), "--gamma", "1"]) == EXIT_USAGE
    assert ":2:" in capsys.readouterr().err


def test_shape_mismatch(tmp_path):
    write_matrix(np.eye(2), tmp_path / "a.mtx")
    write_matrix(np.eye(3), tmp_path / "b.mtx")
    assert main(["analyze", "--sparse", str(tmp_path / "a.mtx"), "--lowrank", str(tmp_path / "b.mtx")]) == 1


def test_numerical_failure(tmp_path):
    C = np.full((3, 3), 1e300)
    C[0, 0] = -1e300
    write_matrix(C, tmp_path / "big.mtx")
    code = main(["decompose", "--input", str(tmp_path / "big.mtx"), "--gamma", "1"])
    assert code == EXIT_NUMERIC


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ranksparse", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("decompose", "analyze", "certify", "phase", "gamma-sweep", "rigidity"):
        assert cmd in out.stdout
