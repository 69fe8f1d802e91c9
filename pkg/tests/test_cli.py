import csv
import io
import json
import subprocess
import sys

import pytest

from gigrowth import cli
from gigrowth.io import ConfigError, fmt_float, load_config, parse_assignment, to_csv


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_reproduce_table1():
    code, out, err = run(["reproduce", "--table", "1"])
    assert code == 0
    assert "max_deviation" in out
    assert sum(line.startswith("S1,") for line in out.splitlines()) == 6
    assert err == ""


def test_reproduce_table2_reports_mismatch():
    code, out, err = run(["reproduce", "--table", "2", "--format", "json"])
    assert code == cli.EXIT_MISMATCH
    doc = json.loads(out)
    assert doc["all_ok"] is False
    assert len(doc["comparison"]) == 90
    assert "mismatch S2,6" in err


def test_solve_invalid_sigma_sum(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("sigma2 = 0.3\n")
    code, out, err = run(["solve", "--config", str(cfg)])
    assert code == cli.EXIT_INVALID
    assert "sigma weights must sum to 1" in err
    assert out == ""


def test_solve_infeasible():
    code, out, err = run(["solve", "--set", "A_p=1e-6"])
    assert code == cli.EXIT_INFEASIBLE
    assert "M3 > 0" in err and out == ""


def test_solve_csv_is_parseable_and_deterministic():
    first = run(["solve", "--format", "csv"])
    second = run(["solve", "--format", "csv"])
    assert first == second
    rows = list(csv.DictReader(io.StringIO(first[1])))
    assert len(rows) == 1
    assert float(rows[0]["c"]) == pytest.approx(0.29474750240082724, rel=1e-15)


def test_config_sections(tmp_path):
    cfg = tmp_path / "t2.toml"
    cfg.write_text(
        "rho = 0.015\nn = 0.01\nsigma1 = 0.5\nsigma2 = 0.5\nsigma = 0.4\n"
        "a1 = 0.6\na2 = 0.4\nA_p = 1.0\nA_d = 1.0\ndelta = 0.01\n"
        "b1 = 0.1\nb2 = 0.7\nb3 = 0.2\n\n"
        "[policy]\ncapital_weight = \"table-consistent\"\n\n"
        "[solver]\ntol = 1e-12\nmax_iter = 50\n\n"
        "[output]\nformat = \"json\"\n"
    )
    code, out, _ = run(["solve", "--config", str(cfg)])
    assert code == 0
    doc = json.loads(out)
    assert doc["steady_state"]["y_p"] == pytest.approx(51.119785, rel=1e-6)
    assert doc["policy"] == {"capital_weight": "table-consistent", "consumption_formula": "table"}
    code, out, err = run(["verify", "--config", str(cfg)])
    assert code == 0
    assert json.loads(out)["converged"] is True


def test_verify_table1():
    code, out, err = run(["verify", "--format", "json", "--verbose"])
    assert code == 0
    doc = json.loads(out)
    assert set(doc["discrepancy"]) >= {"c", "k", "u_p"}
    assert doc["relative_residual_sup_norm"] < 1e-12
    assert err.splitlines()[0].startswith("0 ")


def test_verify_non_convergence():
    code, _, err = run(["verify", "--max-iter", "0", "--tol", "1e-300"])
    assert code == cli.EXIT_NO_CONVERGENCE
    assert "no convergence" in err


def test_statics_json():
    code, out, _ = run(["statics", "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["predicted_signs"] == {"y_wrt_A_p": "-", "c_wrt_A_p": "+",
                                      "y_wrt_A_d": "+", "c_wrt_A_d": "-"}
    assert doc["all_agree"] is True
    assert doc["derivatives"]["A_p"]["analytic"]["d_yp"] == pytest.approx(2.81144825, rel=1e-8)


def test_sweep_joint_fields():
    code, out, err = run(["sweep", "--field", "b1,b2,b3", "--grid", "0.5:0.3:0.2", "0.5:0.2:0.3",
                          "0.5:0.1:0.4", "--set", "sigma1=0.5", "--set", "sigma2=0.5",
                          "--set", "sigma=0.4", "--set", "a1=0.6", "--set", "a2=0.4",
                          "--set", "delta=0.01", "--format", "csv"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["feasible"] for r in rows] == ["true"] * 3
    assert "d: increasing" in err


def test_sweep_bad_grid():
    code, _, err = run(["sweep", "--field", "b1,b2", "--grid", "0.5"])
    assert code == cli.EXIT_INVALID
    assert "needs 2 values" in err


@pytest.mark.parametrize("argv", [
    ["solve", "--set", "nonsense"],
    ["solve", "--set", "xyz=1"],
    ["solve", "--set", "A_p=abc"],
])
def test_invalid_overrides(argv):
    assert run(argv)[0] == cli.EXIT_INVALID


def test_usage_errors_exit_invalid():
    with pytest.raises(SystemExit) as exc:
        cli.main(["reproduce", "--table", "3"], err=io.StringIO())
    assert exc.value.code == cli.EXIT_INVALID


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gigrowth", "reproduce", "--table", "1",
                           "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("case,A_p,A_d,b1,b2,b3,h_p")


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("rho = \n")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.toml")
    odd = tmp_path / "odd.toml"
    odd.write_text("[extras]\nx = 1\n")
    with pytest.raises(ConfigError, match="unknown section"):
        load_config(odd)


@pytest.mark.parametrize("value,text", [
    (1e-9, "1e-09"), (0.1, "0.1"), (51.119785155366344, "51.119785155366344"),
    (float("inf"), "inf"), (True, "true"), (None, ""), (3, "3"),
])
def test_fmt_float(value, text):
    assert fmt_float(value) == text


def test_csv_lowercase_exponent():
    assert to_csv(["x"], [[1.5e-300]]) == "x\n1.5e-300\n"


def test_parse_assignment():
    assert parse_assignment(" A_p = 1.02") == ("A_p", 1.02)
    with pytest.raises(ConfigError):
        parse_assignment("=1")
