import json
import subprocess
import sys

import pytest

from ncstokes import cli
from ncstokes.analysis import ManufacturedCase
from ncstokes.assembly import TabulatedForcing
from ncstokes.solver import NumericalError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_n_list():
    assert cli.parse_n_list("4..32") == [4, 8, 16, 32]
    assert cli.parse_n_list("4,8,12") == [4, 8, 12]
    assert cli.parse_n_list("8..8") == [8]
    for bad in ["", ",", "4..12", "8..4", "a,b", "0,2"]:
        with pytest.raises(cli.UsageError):
            cli.parse_n_list(bad)


def test_infsup_table(capsys):
    code, out, _ = run(capsys, "infsup", "--pair", "q1-p0t", "--n", "4,8")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,h,beta,order,method,residual"
    order = float(lines[2].split(",")[3])
    assert order == pytest.approx(0.78, abs=0.03)


def test_infsup_bubble_pair_json(capsys):
    code, out, _ = run(capsys, "infsup", "--pair", "p1ncb-p0", "--n", "16", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == 1 and data["pair"] == "P1NCB_P0"
    assert data["rows"][0]["beta"] == pytest.approx(4.5296e-01, abs=1e-3)


def test_empty_n_list_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["infsup", "--n", ","])
    assert info.value.code == 2


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["spurious", "--n", "4", "--verbose"])
    assert info.value.code == 2


def test_help_lists_every_flag(capsys):
    for cmd, flags in [
        ("infsup", ["--pair", "--n", "--nu", "--quad", "--format", "--output", "--seed"]),
        ("converge", ["--pair", "--f-case", "--forcing-file", "--forcing-n", "--reference", "--n", "--format"]),
        ("equivalence", ["--f-case", "--forcing-file", "--n", "--format"]),
        ("spurious", ["--pair", "--n", "--format"]),
    ]:
        with pytest.raises(SystemExit) as info:
            cli.main([cmd, "--help"])
        assert info.value.code == 0
        text = capsys.readouterr().out
        for flag in flags:
            assert flag in text


def test_spurious(capsys):
    code, out, _ = run(capsys, "spurious", "--pair", "p1nc-p0", "--n", "8")
    assert code == 0
    n, dim, cos = out.splitlines()[1].split(",")
    assert (n, dim) == ("8", "1") and float(cos) >= 1 - 1e-10
    code, out, _ = run(capsys, "spurious", "--pair", "p1ncb-p0", "--n", "8")
    assert code == 0 and out.splitlines()[1] == "8,0,"


def test_spurious_odd_n_is_an_error(capsys):
    code, _, err = run(capsys, "spurious", "--n", "3", "--pair", "p1ncb-p0")
    assert code == 2 and "even" in err


def test_odd_n_for_reduced_pair(capsys):
    code, _, err = run(capsys, "infsup", "--pair", "p1nc-p0t", "--n", "3")
    assert code == 2 and "even" in err


def test_converge_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["converge", "--n", "4..8", "--seed", "1", "--output", str(a)]) == 0
    assert cli.main(["converge", "--n", "4..8", "--seed", "1", "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0].startswith("n,h,h1_velocity,order_h1")
    assert float(rows[1].split(",")[2]) == pytest.approx(1.5087, rel=0.01)


def test_converge_pretty(capsys):
    code, out, _ = run(capsys, "converge", "--n", "4", "--f-case", "2", "--format", "pretty")
    assert code == 0 and "h1_velocity" in out.splitlines()[0]


def test_converge_with_forcing_file_and_reference(capsys, tmp_path):
    path = tmp_path / "grid.csv"
    TabulatedForcing.from_function(ManufacturedCase(1), 8, 4).to_csv(path)
    code, out, _ = run(
        capsys, "converge", "--forcing-file", str(path), "--forcing-n", "8", "--reference", "dssy:16", "--n", "2..4"
    )
    assert code == 0
    rows = out.splitlines()
    assert len(rows) == 3 and rows[2].split(",")[0] == "4"


@pytest.mark.parametrize(
    "argv",
    [
        ["converge", "--f-case", "const", "--n", "4"],
        ["converge", "--reference", "q1:16", "--n", "4"],
        ["converge", "--reference", "dssy:12", "--n", "8"],
        ["converge", "--n", "4,12"],
        ["converge", "--forcing-file", "missing.csv", "--reference", "dssy:8", "--n", "4"],
    ],
)
def test_converge_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_bad_forcing_file(capsys, tmp_path):
    path = tmp_path / "grid.csv"
    path.write_text("j,k,q,f_x,f_y\n1,1,0,1,1\n")
    code, _, err = run(capsys, "equivalence", "--forcing-file", str(path), "--forcing-n", "2", "--n", "4")
    assert code == 2 and "missing" in err


def test_equivalence(capsys):
    code, out, _ = run(capsys, "equivalence", "--n", "4,8", "--f-case", "const")
    assert code == 0
    assert all(r.endswith(",true") for r in out.splitlines()[1:])


def test_numerical_failure_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("eigen-iteration did not converge")

    monkeypatch.setattr(cli, "infsup_constant", boom)
    code, out, err = run(capsys, "infsup", "--n", "4")
    assert code == 3 and out == ""
    diag = json.loads(err)
    assert diag["schema"] == 1 and diag["error"] == "NumericalError"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ncstokes", "spurious", "--pair", "dssy-p0", "--n", "2..4"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines() == ["n,dimension,checkerboard_cosine", "2,0,", "4,0,"]
