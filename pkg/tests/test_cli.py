import json
import subprocess
import sys

import pytest

from tilingk.cli import main


def run(*args, stdin=None):
    return subprocess.run(
        [sys.executable, "-m", "tilingk", *args],
        input=stdin,
        capture_output=True,
        text=True,
        encoding="utf-8",
    )


def call(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def chair_path(data_dir):
    return str(data_dir / "chair.json")


# -- subprocess ------------------------------------------------------------------


def test_kgroups_with_expected_values(data_dir, chair_path):
    p = run("kgroups", chair_path, "--expect", str(data_dir / "chair.expected.json"))
    assert p.returncode == 0, p.stderr
    assert p.stdout.strip().splitlines()[-1] == "K0 = Z[1/4] (+) Z[1/2]^2 (+) Z, K1 = Z[1/2]^2"
    assert "FAIL" not in p.stdout


def test_snf_from_stdin():
    p = run("snf", "-", "--format", "json", stdin=json.dumps({"rows": 3, "cols": 3, "entries": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}))
    assert p.returncode == 0
    doc = json.loads(p.stdout)
    assert doc["D"]["entries"] == [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]


def test_json_output_is_byte_identical(chair_path):
    a = run("kgroups", chair_path, "--format", "json")
    b = run("kgroups", chair_path, "--format", "json")
    assert a.returncode == 0 and a.stdout == b.stdout


def test_bad_flag_is_an_input_error(chair_path):
    assert run("kgroups", chair_path, "--format", "yaml").returncode == 2


# -- in process ----------------------------------------------------------------------


def test_matrices_level2_json(capsys, chair_path, expected):
    code, out, _ = call(capsys, "matrices", chair_path, "--level", "2", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["rows"] == doc["cols"] == 24
    want = [[str(x) for x in row] for row in expected["matrices"]["tiles"]["entries"]]
    assert doc["basis"] == expected["matrices"]["tiles"]["row_basis"]
    assert doc["entries"] == want


def test_matrices_edges_and_stars(capsys, chair_path):
    code, out, _ = call(capsys, "matrices", chair_path, "--level", "1", "--orientation", "vertical", "--format", "json")
    assert code == 0 and json.loads(out)["rows"] == 10
    code, out, _ = call(capsys, "matrices", chair_path, "--level", "0", "--format", "json")
    assert code == 0 and json.loads(out)["rows"] == 5


def test_eigen_and_dimgroup(capsys, chair_path):
    code, out, _ = call(capsys, "eigen", chair_path)
    assert code == 0 and "lambda = 0: algebraic 9, geometric 8" in out
    code, out, _ = call(capsys, "dimgroup", chair_path, "--format", "json")
    assert json.loads(out)["group"] == "Z[1/4] (+) Z[1/2]^2 (+) Z^12"


def test_utility_verbs_take_inline_matrices(capsys, tmp_path):
    f = tmp_path / "m.json"
    f.write_text("[[2, 4], [1, 2]]")
    code, out, _ = call(capsys, "kernel", str(f), "--format", "json")
    assert code == 0 and json.loads(out)["rank"] == 1
    code, out, _ = call(capsys, "dimgroup", str(f))
    assert code == 0 and out.startswith("Z[1/4]")


def test_validate_forcing_boundary(capsys, chair_path, data_dir):
    assert call(capsys, "validate", chair_path)[0] == 0
    code, out, _ = call(capsys, "forcing", str(data_dir / "arrow_chair.json"), "--format", "json")
    assert code == 0 and json.loads(out)["forces"] is False
    code, out, _ = call(capsys, "boundary", chair_path, "--level", "1", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["level"] == 1 and doc["cols"] == 10


def test_patch_svg_and_json(capsys, chair_path, tmp_path):
    svg = tmp_path / "p.svg"
    assert call(capsys, "patch", chair_path, "--order", "2", "--out", str(svg))[0] == 0
    assert svg.read_text().startswith("<svg")
    js = tmp_path / "p.json"
    assert call(capsys, "patch", chair_path, "--order", "1", "--tile", "B", "--out", str(js))[0] == 0
    assert len(json.loads(js.read_text())["tiles"]) == 4


def test_exit_codes(capsys, data_dir, tmp_path, expected):
    # input errors
    assert call(capsys, "validate", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert call(capsys, "snf", str(bad))[0] == 2
    bad.write_text(json.dumps({"name": "x", "rotation_order": 4, "prototiles": []}))
    assert call(capsys, "validate", str(bad))[0] == 2
    assert call(capsys, "patch", str(data_dir / "chair.json"), "--tile", "nope")[0] == 2
    # computation errors
    code, _, err = call(capsys, "kgroups", str(data_dir / "trivial.json"))
    assert code == 1 and "[gate]" in err
    assert call(capsys, "kgroups", str(data_dir / "arrow_chair.json"))[0] == 1
    # ledger failure
    wrong = json.loads(json.dumps(expected))
    wrong["groups"]["K0"] = "Z"
    ref = tmp_path / "wrong.json"
    ref.write_text(json.dumps(wrong))
    code, out, _ = call(capsys, "kgroups", str(data_dir / "chair.json"), "--expect", str(ref))
    assert code == 3 and "[FAIL] expected/group/K0" in out
