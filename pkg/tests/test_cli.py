import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import F2, elementary
from tensorcommutant.cli import main
from tensorcommutant.matrix_core import matrix_from_json, matrix_to_json


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _write(tmp_path, name, m):
    p = tmp_path / name
    p.write_text(json.dumps(matrix_to_json(np.asarray(m, dtype=complex))))
    return str(p)


def test_commutant_u_udagger(capsys):
    code, out, _ = _run(capsys, "commutant", "--word", "U,U^H", "--dim", "U=3", "--seed", "7")
    assert code == 0
    rep = json.loads(out)
    assert rep["commutant"]["dim"] == 1
    assert rep["recognition"]["verdict"] == "exact-span"
    assert rep["config"]["seed"] == 7 and rep["config"]["word"] == "U,U^H"
    assert rep["config"]["dims"] == {"U": 3}
    assert rep["flags"] == []


def test_commutant_three_factor_text(capsys):
    code, out, _ = _run(capsys, "commutant", "--word", "U,U,U^H", "--dim", "U=2", "--seed", "7",
                        "--format", "text")
    assert code == 0
    assert "commutant dimension 2" in out
    assert "F⊗I" in out.split("span contains:")[1]


def test_commutant_orthogonal_reports_and_flags(capsys):
    code, out, _ = _run(capsys, "commutant", "--word", "U,U^T", "--dim", "U=2", "--group", "U=orthogonal")
    rep = json.loads(out)
    assert code == 0
    assert rep["commutant"]["dim"] == 2
    assert rep["recognition"]["library_in_span"]["M⊗M"] is True
    assert rep["recognition"]["library_in_span"]["F"] is False
    code, out, _ = _run(capsys, "commutant", "--word", "U,U", "--dim", "U=2", "--group", "U=orthogonal")
    rep = json.loads(out)
    assert rep["commutant"]["dim"] == 3
    assert any("> 2" in f for f in rep["flags"])


def test_identical_config_gives_identical_bytes(tmp_path, capsys):
    paths = []
    for k in range(2):
        p = tmp_path / f"run{k}.json"
        assert main(["commutant", "--word", "U,U", "--dim", "U=2", "--seed", "3", "--out", str(p)]) == 0
        paths.append(p)
    capsys.readouterr()
    a, b = (p.read_bytes() for p in paths)
    # the out path is part of the header, so compare with it normalized
    a = a.replace(b"run0", b"runX")
    b = b.replace(b"run1", b"runX")
    assert a == b
    code1, out1, _ = _run(capsys, "commutant", "--word", "U,U", "--dim", "U=2", "--seed", "3")
    code2, out2, _ = _run(capsys, "commutant", "--word", "U,U", "--dim", "U=2", "--seed", "3")
    assert out1 == out2


def test_verify_pass_and_fail(tmp_path, capsys):
    ident = _write(tmp_path, "i.json", np.eye(8))
    fxi = _write(tmp_path, "fxi.json", np.kron(F2, np.eye(2)))
    f = _write(tmp_path, "f.json", F2)
    assert _run(capsys, "verify", "--word", "U,U,U^H", "--dim", "U=2", ident)[0] == 0
    assert _run(capsys, "verify", "--word", "U,U,U^H", "--dim", "U=2", fxi)[0] == 0
    code, out, _ = _run(capsys, "verify", "--word", "U,U^H", "--dim", "U=2", f)
    assert code == 5
    rep = json.loads(out)
    assert rep["pass"] is False and rep["max_residual"] > 0.1


def test_twirl_near_exact(tmp_path, capsys):
    x = np.kron(elementary(2, 1, 1), elementary(2, 1, 1))
    path = _write(tmp_path, "in.json", x)
    code, out, _ = _run(capsys, "twirl", "--word", "U,U^H", "--dim", "U=2", "-N", "1000", path)
    assert code == 0
    rep = json.loads(out)
    got = matrix_from_json(rep["output"])
    assert np.linalg.norm(got - np.eye(4) / 4) < 0.1
    np.testing.assert_allclose(matrix_from_json(rep["exact"]), np.eye(4) / 4, atol=1e-12)
    assert abs(rep["trace_out"][0] - 1) < 1e-12


def test_twirl_convergence_csv(tmp_path, capsys):
    a = np.random.default_rng(1).normal(size=(4, 4))
    path = _write(tmp_path, "in.json", a + a.T)
    table = tmp_path / "conv.csv"
    code, out, _ = _run(capsys, "twirl", "--word", "U,U", "--dim", "U=2", "-N", "10",
                        "--schedule", "10,100,1000", "--csv", str(table), path)
    assert code == 0
    assert json.loads(out)["convergence"]["slope_defined"] is True
    rows = list(csv.reader(open(table)))
    assert rows[0] == ["N", "error"] and len(rows) == 4


def test_region_f_and_f_tensor_i(tmp_path, capsys):
    out_path = tmp_path / "region.json"
    code, _, _ = _run(capsys, "region", "--direction", "F", "--dim", "2", "--out", str(out_path))
    assert code == 0
    rep = json.loads(out_path.read_text())
    assert rep["region"]["description"] == ["x >= |y|"]
    assert rep["grid"]["disagreements"] == 0
    rows = list(csv.reader(open(tmp_path / "region.csv")))
    assert rows[0][:3] == ["x", "y", "min_eigenvalue"] and len(rows) == 442
    code, out, _ = _run(capsys, "region", "--direction", "F⊗I", "--dim", "2", "--format", "text")
    assert code == 0 and "x >= |y|" in out and "closed cone" in out


def test_report_text(capsys):
    code, out, _ = _run(capsys, "report", "--format", "text")
    assert code == 0
    assert "U,U,U,U^H" in out
    assert "disagreements 0" in out


@pytest.mark.parametrize(
    "argv, code",
    [
        (["commutant", "--word", "U,,U", "--dim", "U=2"], 5),
        (["commutant", "--word", "U,V", "--dim", "U=2"], 5),
        (["commutant", "--word", "U,U", "--dim", "U=x"], 5),
        (["commutant", "--word", "U,U,U", "--dim", "U=5"], 5),
        (["commutant", "--word", "U,U", "--dim", "U=2", "--min-gap", "1e300"], 2),
        (["region", "--direction", "Q", "--dim", "2"], 5),
        (["verify", "--word", "U,U", "--dim", "U=2", "/nonexistent/m.json"], 4),
        (["frobnicate"], 5),
    ],
)
def test_exit_codes(argv, code, capsys):
    try:
        got = main(argv)
    except SystemExit as exc:
        got = exc.code
    assert got == code
    capsys.readouterr()


def test_loose_threshold_fails_verification(capsys):
    # a kernel cutoff that admits non-commuting directions is caught on fresh samples
    code, _, err = _run(capsys, "commutant", "--word", "U,V", "--dim", "U=2", "--dim", "V=2",
                        "--samples", "2", "--tol", "0.5", "--min-gap", "1")
    assert code == 5
    assert "fails verification" in err


def test_unstable_dimension_exit_code(monkeypatch, capsys):
    from tensorcommutant import cli
    from tensorcommutant.errors import UnstableDimension

    def boom(*a, **k):
        raise UnstableDimension("dimension not stable: [3, 2, 1]", dims=[3, 2, 1])

    monkeypatch.setattr(cli, "commutant_basis", boom)
    code, _, err = _run(capsys, "commutant", "--word", "U,U", "--dim", "U=2")
    assert code == 3 and "[commutant]" in err


def test_bad_matrix_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert _run(capsys, "verify", "--word", "U,U", "--dim", "U=2", str(p))[0] == 5
    p.write_text(json.dumps(matrix_to_json(np.eye(3))))
    assert _run(capsys, "verify", "--word", "U,U", "--dim", "U=2", str(p))[0] == 5


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "tensorcommutant", "region", "--direction", "M⊗M", "--dim", "2"],
        capture_output=True, text=True, check=False,
    )
    assert r.returncode == 0
    rep = json.loads(r.stdout)
    assert rep["region"]["notes"]
