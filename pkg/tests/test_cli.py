import json
import subprocess
import sys

import pytest

from mtreg.cli import main
from mtreg.dataset import CellParseError, ingest_csv


@pytest.fixture
def golden(tmp_path):
    path = tmp_path / "golden.csv"
    path.write_text("a,x\n0,1\n1,1\n2,3\n")
    return str(path)


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(argv, capsys):
    code, out, err = run(argv + ["--format", "json"], capsys)
    assert code == 0, err
    return json.loads(out)


def test_fit_golden(golden, capsys):
    rep = run_json(["fit", "--data", golden, "--response", "x", "--explanatory", "a"], capsys)
    assert set(rep) == {"command", "fit", "intervals", "tests", "coverage", "seed", "mode"}
    assert rep["fit"]["beta_hat"] == pytest.approx([2 / 3, 1.0], abs=1e-14)
    assert rep["fit"]["sigma_hat_sq_mle"] == pytest.approx(2 / 9, abs=1e-14)
    assert rep["fit"]["sigma_hat_sq_unbiased"] == pytest.approx(2 / 3, abs=1e-14)
    assert rep["mode"] == "exact"
    assert "timing" not in rep


def test_test_golden_paper_verbatim(golden, capsys):
    argv = ["test", "--data", golden, "--response", "x", "--explanatory", "a",
            "--null", "0", "--coef", "1", "--alpha", "0.05", "--mode", "paper-verbatim"]
    rep = run_json(argv, capsys)
    (t,) = rep["tests"]
    assert t["statistic"] == pytest.approx(3.0, abs=1e-12)
    assert t["threshold"] == pytest.approx(12.7062, abs=1e-3)
    assert t["rejected"] is False
    assert t["mode"] == "paper_verbatim"


def test_ci_golden(golden, capsys):
    rep = run_json(["ci", "--data", golden, "--response", "x", "--explanatory", "a",
                    "--mode", "paper_verbatim"], capsys)
    assert [iv["coef"] for iv in rep["intervals"]] == [0, 1]
    iv = rep["intervals"][1]
    assert iv["lo"] == pytest.approx(-3.2354, abs=1e-3)
    assert iv["hi"] == pytest.approx(5.2354, abs=1e-3)
    assert all(iv["mode"] == "paper_verbatim" for iv in rep["intervals"])


def test_output_is_byte_stable(golden, capsys):
    argv = ["ci", "--data", golden, "--response", "x", "--explanatory", "a", "--format", "json"]
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    assert first == second
    argv_text = argv[:-2]
    assert run(argv_text, capsys)[1] == run(argv_text, capsys)[1]


def test_floats_use_17_digits(golden, capsys):
    _, out, _ = run(["fit", "--data", golden, "--response", "x", "--explanatory", "a", "--format", "json"], capsys)
    assert "0.66666666666666674" in out
    rep = json.loads(out)
    assert rep["fit"]["beta_hat"][0] == float("0.66666666666666674")


def test_text_and_json_carry_same_numbers(golden, capsys):
    base = ["test", "--data", golden, "--response", "x", "--explanatory", "a", "--null", "0.5"]
    rep = run_json(base, capsys)
    _, text, _ = run(base, capsys)
    for t in rep["tests"]:
        assert format(t["statistic"], ".17g") in text
        assert format(t["threshold"], ".17g") in text
    for b in rep["fit"]["beta_hat"]:
        assert format(b, ".17g") in text


def test_timing_only_on_request(golden, capsys):
    rep = run_json(["fit", "--data", golden, "--response", "x", "--explanatory", "a", "--timing"], capsys)
    assert rep["timing"]["elapsed_seconds"] >= 0


def test_coverage_command(golden, capsys):
    argv = ["coverage", "--data", golden, "--explanatory", "a", "--beta", "1,2", "--sigma", "1",
            "--reps", "200", "--seed", "9", "--mode", "both"]
    rep = run_json(argv, capsys)
    assert rep["seed"] == 9 and rep["mode"] == "both"
    cov = rep["coverage"]
    assert cov["replications"] == 200 and cov["df"] == 1
    assert {(e["coef"], e["mode"]) for e in cov["entries"]} == {
        (0, "exact"), (1, "exact"), (0, "paper_verbatim"), (1, "paper_verbatim")
    }
    assert run_json(argv, capsys) == rep


@pytest.mark.parametrize(
    "content, argv_extra, code",
    [
        (None, [], 3),
        ("a,x\n0,1\n1,1\n2,3\n", ["--explanatory", "b"], 4),
        ("a,x\n0,1\n1,\n2,3\n", [], 5),
        ("a,x\n0,1\n1,oops\n2,3\n", [], 5),
        ("a,x\n0,1\n1,1\n", [], 6),
        ("a,x\n1,1\n1,2\n1,3\n", [], 7),
    ],
)
def test_exit_codes(tmp_path, capsys, content, argv_extra, code):
    path = tmp_path / "d.csv"
    if content is not None:
        path.write_text(content)
    argv = ["fit", "--data", str(path), "--response", "x", "--explanatory", "a"]
    if argv_extra:
        argv = argv[:-2] + argv_extra
    got, out, err = run(argv, capsys)
    assert got == code
    assert out == ""
    assert err.startswith("mtreg fit: error:")


def test_usage_errors(golden, capsys):
    for argv in (
        ["ci", "--data", golden, "--response", "x", "--explanatory", "a", "--alpha", "1.5"],
        ["ci", "--data", golden, "--response", "x", "--explanatory", "a", "--mode", "loose"],
        ["coverage", "--data", golden, "--explanatory", "a", "--beta", "1,2", "--sigma", "-1", "--reps", "5"],
    ):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
    capsys.readouterr()


def test_domain_error_exit(golden, capsys):
    code, _, err = run(["ci", "--data", golden, "--response", "x", "--explanatory", "a", "--coef", "3"], capsys)
    assert code == 8 and "coef" in err
    code, _, _ = run(["coverage", "--data", golden, "--explanatory", "a", "--beta", "1", "--sigma", "1", "--reps", "5"], capsys)
    assert code == 8


def test_missing_cell_diagnostic_names_row_and_column(tmp_path):
    path = tmp_path / "gap.csv"
    path.write_text("a,x\n0,1\n1,\n2,3\n")
    with pytest.raises(CellParseError) as exc:
        ingest_csv(path, "x", ["a"])
    assert exc.value.row == 2 and exc.value.column == "x"
    assert "row 2" in str(exc.value)


def test_glm_dataset_shape(tmp_path, capsys):
    path = tmp_path / "glm.csv"
    path.write_text("a1,a2,x\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n")
    ds = ingest_csv(path, "x", ["a1", "a2"])
    assert (ds.n, ds.m) == (4, 2)
    rep = run_json(["fit", "--data", str(path), "--response", "x", "--explanatory", "a1,a2"], capsys)
    assert rep["fit"]["beta_hat"] == pytest.approx([1.0, 1.0, 2.0], abs=1e-13)


def test_module_entry_point(golden):
    proc = subprocess.run(
        [sys.executable, "-m", "mtreg", "fit", "--data", golden, "--response", "x", "--explanatory", "a"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "0.66666666666666674" in proc.stdout
