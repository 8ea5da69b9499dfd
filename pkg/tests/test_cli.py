import json
import subprocess
import sys

import pytest

from bandgrowth.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_profile_shift(capsys):
    code, out = run(capsys, "profile", "shift", "--window", "64")
    assert code == 0
    obj = json.loads(out)
    assert obj["command"] == "profile"
    assert obj["fit"]["s"] == 0.0 and set(obj["profile"]) == {1}


def test_construct_bad_r_is_usage_error(capsys):
    code, _ = run(capsys, "construct", "--r", "1")
    assert code == 2


def test_unknown_command(capsys):
    assert main(["frobnicate"]) == 2


def test_malformed_matrix_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    code, out = run(capsys, "profile", str(bad))
    assert code == 2
    assert json.loads(out)["error"] == "UsageError"


def test_step1_rejects_exponent_one(capsys):
    code, _ = run(capsys, "step1", "--s-grid", "1", "--m-max", "4", "--n-values", "10,100")
    assert code == 2


def test_step1_pass(capsys, tmp_path):
    code, out = run(capsys, "step1", "--s-grid", "0.5", "--m-max", "8", "--n-values", "1e2,1e3", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "step1.json").exists()
    assert any(p.suffix == ".csv" for p in tmp_path.iterdir())


def test_free_shift_pair(capsys):
    code, out = run(capsys, "free", "shift", "shiftT", "--window", "16", "--max-len", "2")
    obj = json.loads(out)
    assert code == 0 and obj["free"] is False


def test_keyprop_small(capsys):
    code, out = run(capsys, "keyprop", "--K", "4")
    assert code == 0 and json.loads(out)["all_exact"]


def test_stretch_bad_exponent(capsys):
    code, _ = run(capsys, "stretch", "--s", "0.75", "--window", "100")
    assert code == 2


def test_bad_seed(capsys):
    assert main(["construct", "--seed", "0xZZ"]) == 2


@pytest.mark.parametrize("argv", [
    ["tridiag", "--window", "120", "--k", "2", "--bandwidth", "2"],
    ["free", "random:c=2,s=0", "random:c=2,s=0", "--field", "q", "--window", "64", "--max-len", "3"],
])
def test_output_deterministic(argv):
    cmd = [sys.executable, "-m", "bandgrowth", *argv]
    a = subprocess.run(cmd, capture_output=True, check=False)
    b = subprocess.run(cmd, capture_output=True, check=False)
    assert a.returncode == b.returncode and a.returncode in (0, 4)
    assert a.stdout == b.stdout and a.stdout
