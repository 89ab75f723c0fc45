from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from hpdual.cli import main

MEYER = {"builtin": "meyer"}


def run_cli(tmp_path, command, params=None, *extra, name="cfg.json"):
    args = [command]
    if params is not None:
        cfg = tmp_path / name
        cfg.write_text(json.dumps(params))
        args += ["--config", str(cfg)]
    out = tmp_path / f"{command}.out"
    code = main([*args, "--out", str(out), *extra])
    return code, out.read_text() if out.exists() else ""


def test_report_reproduces_reference_values(tmp_path):
    code, text = run_cli(tmp_path, "report")
    assert code == 0
    d = json.loads(text)
    assert d["certified"] and d["exit_code"] == 0
    assert d["display_bound_stated_C"] == pytest.approx(0.8767175312597855, rel=1e-6)
    assert d["certificate_fixed_zeta"]["mp_bound"] == pytest.approx(0.3895037144, rel=1e-8)
    assert d["constants"]["cz"]["kappa"] == pytest.approx([4.0, 10 / 3])
    assert "budgets" in d


def test_reports_are_byte_identical_across_runs(tmp_path):
    params = {"psi": MEYER, "phi": MEYER, "p": 1.0, "n_points": 3}
    a = run_cli(tmp_path, "kernel-check", params, "--seed", "5")[1]
    b = run_cli(tmp_path, "kernel-check", params, "--seed", "5")[1]
    assert a == b and a


def test_constants_json_and_csv(tmp_path):
    code, text = run_cli(tmp_path, "constants")
    assert code == 0
    d = json.loads(text)
    assert d["cz"]["cz_constant"]["value"] < 0.022
    assert d["hardy"]["identity_residual"] <= 1e-12
    code, text = run_cli(tmp_path, "constants", None, "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["key", "value"] and len(rows) > 10


def test_certify_exit_codes(tmp_path):
    ok = {"p": 0.6, "inputs": {"U1": 0.00026, "C1": 0.022}}
    assert run_cli(tmp_path, "certify", ok)[0] == 0
    bad = {"p": 0.6, "inputs": {"U1": 10.0, "C1": 0.022}}
    code, text = run_cli(tmp_path, "certify", bad)
    assert code == 1 and json.loads(text)["certified"] is False


def test_certify_fixed_b_and_zeta(tmp_path):
    params = {"p": 0.5, "n": 0, "calG": 1.0, "b": 250, "zeta": 5.0, "inputs": {"U1": 0.00026, "C1": 0.022}}
    code, text = run_cli(tmp_path, "certify", params)
    assert code == 0
    assert json.loads(text)["mp_bound"] == pytest.approx(0.3899372886148844, rel=1e-9)


def test_certify_exact_quadruple(tmp_path):
    q = {"psi": MEYER, "phi": MEYER, "psi_star": MEYER, "phi_star": MEYER}
    code, text = run_cli(tmp_path, "certify", {"p": 1.0, "quadruple": q})
    assert code == 0 and json.loads(text)["mp_bound"] == 0.0


@pytest.mark.parametrize("params", [
    {"p": 1.5, "inputs": {"U1": 0.0, "C1": 0.0}},
    {"p": 0.6},
    {"p": 0.6, "inputs": {"U1": -1, "C1": 0.0}},
    {"p": 0.6, "inputs": {"U1": 0, "C1": 0}, "b_grid": "many"},
    {"p": 0.6, "b": 2.0, "inputs": {"U1": 0, "C1": 0}},
])
def test_bad_configs_exit_2(tmp_path, params):
    assert run_cli(tmp_path, "certify", params)[0] == 2


def test_malformed_json_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{nope")
    assert main(["certify", "--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert main(["report", "--config", str(tmp_path / "missing.json")]) == 2


def test_unknown_generator_exits_2(tmp_path):
    assert run_cli(tmp_path, "kernel-check", {"psi": {"builtin": "haar"}, "phi": MEYER, "p": 1.0})[0] == 2


def test_kernel_check_csv(tmp_path):
    params = {"psi": MEYER, "phi": MEYER, "p": 1.0, "n_points": 2}
    code, text = run_cli(tmp_path, "kernel-check", params, "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert code == 0
    assert rows[0] == ["x", "y", "alpha", "lhs", "bound", "margin", "budget", "pass", "kernel"]
    assert len(rows) == 1 + 2 * 2 * 2


def test_atoms_check(tmp_path):
    code, text = run_cli(tmp_path, "atoms-check", {"p": 0.6, "b": 10, "zeta": 2})
    d = json.loads(text)
    assert code == 0 and d["appendix_checks_passed"] and d["atomic_bound"]["passed"]
    code, text = run_cli(tmp_path, "atoms-check", {"p": 0.6, "molecule": {"kind": "zero"}}, "--format", "csv")
    assert code == 0 and text.splitlines()[0] == "k,norm_Mk,norm_Mk_minus_Pk,lambda_k,bound,pass"
    assert run_cli(tmp_path, "atoms-check", {"p": 0.6, "molecule": {"order": 0}})[0] == 2


SIGNAL = {"kind": "coefficients", "entries": [[0, 0, 1.0], [1, -2, 0.5], [-1, 1, -0.25]]}


@pytest.mark.parametrize("command", ["apply", "invert", "expand"])
def test_operator_commands_with_exact_pair(tmp_path, command):
    params = {"psi": MEYER, "phi": MEYER, "signal": SIGNAL}
    code, text = run_cli(tmp_path, command, params)
    assert code == 0
    d = json.loads(text)
    if command == "apply":
        assert d["relative_change"] <= 1e-6
        assert d["budgets"]["kind"] == "empirical"
    elif command == "invert":
        assert d["neumann"]["iterations"] <= 2
    else:
        assert d["relative_error"] <= 1e-9 and d["f02p_seqnorm"] > 0


def test_operator_command_rejects_unknown_signal(tmp_path):
    params = {"psi": MEYER, "phi": MEYER, "signal": {"kind": "noise"}}
    assert run_cli(tmp_path, "apply", params)[0] == 2


def test_module_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "hpdual", "report", "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("key,value")
