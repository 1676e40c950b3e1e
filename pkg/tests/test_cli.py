import json
import math
import subprocess
import sys

import pytest

from latsym.cli import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_verify_builtin_evolutionary_passes(capsys):
    code, doc = run(capsys, "verify", "--scheme", "heat", "--symmetry", "B", "--mode", "evolutionary")
    assert code == EXIT_PASS and doc["result"]["verdict"] == "pass"
    assert doc["config"]["kind"] == "evolutionary" and doc["config"]["seed"] == 0


def test_verify_nonlinear_characteristic_fails(capsys):
    code, doc = run(capsys, "verify", "--scheme", "heat", "--symmetry", "u^2", "--mode", "evolutionary")
    assert code == EXIT_FAIL and doc["result"]["verdict"] == "fail"


def test_verify_point_expression(capsys):
    code, _ = run(capsys, "verify", "--scheme", "heat", "--symmetry", "0;0;x^2+2*t", "--mode", "point")
    assert code == EXIT_PASS


def test_verify_isospectral_commutation(capsys):
    code, doc = run(capsys, "verify", "--scheme", "dttl", "--symmetry", "isospectral")
    assert code == EXIT_PASS
    assert doc["result"]["min_order"] >= 1.9


def test_reduce_heat_translation_point(capsys):
    code, doc = run(capsys, "reduce", "--scheme", "heat", "--symmetry", "translation", "--mode", "point", "--k", "1", "--c", "1")
    assert code == EXIT_PASS
    assert doc["result"]["values"]["alpha_A"] == pytest.approx(math.log(2))


def test_reduce_heat_dilation_evolutionary(capsys):
    code, doc = run(capsys, "reduce", "--scheme", "heat", "--symmetry", "dilation", "--mode", "evolutionary",
                    "--c", "1", "--gamma0", "1", "--n", "3", "--m", "-7")
    vals = doc["result"]["values"]
    assert code == EXIT_PASS and vals["gamma_n"] == "8/1"
    assert vals["v"] == "1/1" and vals["I"] == "1/8"


def test_reduce_dttl_nonisospectral(capsys):
    code, doc = run(capsys, "reduce", "--scheme", "dttl", "--symmetry", "nonisospectral")
    res = doc["result"]
    assert code == EXIT_PASS and res["values"]["a_values"] == ["1/1"] and res["values"]["b_values"] == ["0/1"]
    assert res["constraint"]["A(m)"] == "m*(m+1)"


@pytest.mark.parametrize("N, n, c, want", [(1, 3, "1", "1/8"), (0, 5, "2", "0/1"), (7, 3, "1", "1/1")])
def test_oracle_values(capsys, N, n, c, want):
    code, doc = run(capsys, "oracle", "I", "--N", str(N), "--n", str(n), "--c", c, "--contour")
    assert code == EXIT_PASS and doc["result"]["value"] == want
    assert doc["result"]["contour_deviation"] < 1e-9


def test_constraint_violation_is_exit_2_with_message(capsys):
    code, doc = run(capsys, "reduce", "--scheme", "heat", "--symmetry", "translation", "--mode", "point",
                    "--k", "1/2", "--c", "1")
    assert code == EXIT_FAIL
    assert "not an integer" in doc["error"]["message"]


@pytest.mark.parametrize("argv", [["frobnicate"], ["verify", "--scheme", "heat", "--symmetry", "u[1,"],
                                  ["verify", "--arith", "complex"], ["oracle", "I", "--n", "x"]])
def test_usage_errors_exit_1(capsys, argv):
    assert main(argv) == EXIT_USAGE


def test_parse_error_reports_span(capsys):
    main(["verify", "--scheme", "heat", "--symmetry", "u[1,"])
    assert "4:5" in capsys.readouterr().err


def test_config_file_and_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# heat oracle\nc = 2\nn = 2\nN = 1\narith = rational\n".replace("arith", "mode"))
    code, doc = run(capsys, "oracle", "I", "--config", str(cfg))
    assert code == EXIT_PASS and doc["result"]["value"] == "4/9"
    code, doc = run(capsys, "oracle", "I", "--config", str(cfg), "--c", "1")
    assert doc["result"]["value"] == "1/4"
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    assert main(["oracle", "I", "--config", str(bad)]) == EXIT_USAGE


def test_environment_sets_arithmetic_mode(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("LATSYM_MODE", "rational")
    _, doc = run(capsys, "oracle", "I")
    assert doc["config"]["mode"] == "rational"
    cfg = tmp_path / "run.cfg"
    cfg.write_text("mode = double\n")
    _, doc = run(capsys, "oracle", "I", "--config", str(cfg))
    assert doc["config"]["mode"] == "double"
    _, doc = run(capsys, "oracle", "I", "--config", str(cfg), "--arith", "rational")
    assert doc["config"]["mode"] == "rational"


def test_output_file_is_written_atomically(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["oracle", "I", "--N", "2", "--n", "3", "--c", "1", "--output", str(out)]) == EXIT_PASS
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["result"]["value"] == "-3/4"
    assert [p.name for p in tmp_path.iterdir()] == ["r.json"]


def test_evolve_csv_and_json(tmp_path, capsys):
    out = tmp_path / "u.csv"
    argv = ["evolve", "--scheme", "heat", "--c", "1", "--sigma-x", "1", "--steps", "2", "--width", "3", "--arith", "rational"]
    assert main(argv + ["--format", "csv", "--output", str(out)]) == EXIT_PASS
    assert out.read_text().splitlines()[0] == "m,n,x,t,u"
    code, doc = run(capsys, *argv)
    assert code == EXIT_PASS and "field" in doc["result"]
    assert main(["oracle", "I", "--format", "csv", "--output", str(out)]) == EXIT_USAGE


def test_repeated_runs_are_byte_identical():
    argv = [sys.executable, "-m", "latsym.cli", "verify", "--scheme", "heat", "--symmetry", "K", "--seed", "7"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and a


def test_report_runs_every_builtin(capsys):
    code, doc = run(capsys, "report")
    assert code == EXIT_PASS and doc["result"]["all_pass"] is True
    assert len(doc["result"]["entries"]) >= 20
