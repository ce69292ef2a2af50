import json
import os

import pytest

from logmodcert.cli import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, run


def test_unknown_command(run_cli):
    code, _ = run_cli("nope", "build")
    assert code == EXIT_ERROR


def test_unknown_flag_is_usage_error(run_cli):
    code, _ = run_cli("chain", "build", "--bogus", "1")
    assert code == EXIT_ERROR


def test_missing_action_is_usage_error(run_cli):
    code, _ = run_cli("budget")
    assert code == EXIT_ERROR


def test_empty_argv():
    assert run([]) == EXIT_ERROR


@pytest.mark.parametrize("command", ["chain", "logmod", "blowup", "budget", "lab"])
def test_selftests_pass(run_cli, command):
    code, report = run_cli(command, "--selftest", report=f"{command}-selftest-report.json")
    assert code == EXIT_PASS
    assert report["status"] == "pass"
    assert all(report["metrics"]["checks"].values())


# ==========================================
# CHAIN
# ==========================================
def test_chain_build_then_verify(run_cli):
    code, report = run_cli("chain", "build", "--samples", "200", report="chain-build-report.json")
    assert code == EXIT_PASS
    assert report["artifacts"] == ["chain.json"]
    chain_path = os.path.join(run_cli.out, "chain.json")
    code, report = run_cli("chain", "verify", "--chain", chain_path, report="chain-verify-report.json")
    assert code == EXIT_PASS and report["status"] == "pass"


def test_chain_verify_without_chain_file(run_cli):
    code, _ = run_cli("chain", "verify")
    assert code == EXIT_ERROR


def test_chain_random_small(run_cli):
    code, report = run_cli("chain", "random", "--instances", "30", "--m", "3,4", "--k", "1,2",
                           report="chain-random-report.json")
    assert code == EXIT_PASS
    assert report["metrics"]["failures"] == 0


# ==========================================
# LOGMOD
# ==========================================
def test_logmod_unit_propagation(run_cli):
    code, report = run_cli("logmod", "propagate", "--mode", "unit", "--pairs", "2000",
                           report="logmod-propagate-report.json")
    assert code == EXIT_PASS
    assert report["metrics"]["alpha"] == pytest.approx(1.0)
    with open(os.path.join(run_cli.out, "logmod.json"), encoding="utf-8") as f:
        bound = json.load(f)
    assert bound["certificate"]["mode"] == "unit"


def test_logmod_planted_violation_fails(run_cli):
    code, report = run_cli("logmod", "verify", "--mode", "unit", "--planted", "--pairs", "500",
                           report="logmod-verify-report.json")
    assert code == EXIT_FAIL
    assert report["status"] == "fail"
    assert report["metrics"]["violation_count"] >= 1


def test_logmod_verify_given_bound(run_cli, tmp_path):
    bound = tmp_path / "bound.json"
    bound.write_text(json.dumps({"C": 1.0, "alpha": 1.0}))
    code, report = run_cli("logmod", "verify", "--mode", "unit", "--bound", str(bound), "--pairs", "1000",
                           report="logmod-verify-report.json")
    assert code == EXIT_PASS
    assert report["certificate"] == {"C": 1.0, "alpha": 1.0}


# ==========================================
# BUDGET AND CONFIG
# ==========================================
def test_budget_sweep_writes_curve_and_script(run_cli):
    code, report = run_cli("budget", "sweep", "--D", "2", "--gamma", "0.9", "--B", "2", "--n", "2",
                           "--gnuplot-script", report="budget-sweep-report.json")
    assert code == EXIT_PASS
    assert report["artifacts"] == ["sweep.csv", "sweep.gp"]
    with open(os.path.join(run_cli.out, "sweep.csv"), encoding="utf-8") as f:
        header = f.readline().strip()
    assert header == "t,m,term1,term2,term3,envelope,weighted"
    assert report["metrics"]["points"] == 401


def test_budget_reads_config_block(run_cli, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": 5, "budget": {"gamma_init": 0.25, "target": 2.0}}))
    code, report = run_cli("budget", "bootstrap", "--config", str(cfg), report="budget-bootstrap-report.json")
    assert code == EXIT_PASS
    assert report["metrics"]["exponents"][0] == 0.25
    assert report["metrics"]["final"] > 2.0


def test_explicit_flag_beats_config(run_cli, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"budget": {"gamma_init": 0.25}}))
    code, report = run_cli("budget", "bootstrap", "--config", str(cfg), "--gamma-init", "0.5",
                           report="budget-bootstrap-report.json")
    assert code == EXIT_PASS
    assert report["metrics"]["exponents"] == [0.5, 0.75, 1.3125]


def test_bad_config_is_usage_error(run_cli, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    code, _ = run_cli("budget", "bootstrap", "--config", str(cfg))
    assert code == EXIT_ERROR


# ==========================================
# LAB AND BLOWUP
# ==========================================
def test_lab_fitmod_default(run_cli):
    code, report = run_cli("lab", "fitmod", "--expect-M", "3", report="lab-fitmod-report.json")
    assert code == EXIT_PASS
    assert report["metrics"]["M"] == pytest.approx(3.0, abs=0.1)


def test_lab_saved_field_is_reused(run_cli):
    code, _ = run_cli("lab", "fitmod", "--save-field", "u.gf", report="lab-fitmod-report.json")
    assert code == EXIT_PASS
    field = os.path.join(run_cli.out, "u.gf")
    assert os.path.exists(field)
    code, report = run_cli("lab", "fitmod", "--field", field, report="lab-fitmod-report.json")
    assert code == EXIT_PASS


def test_blowup_check_off_oracle_dimensions(run_cli):
    code, report = run_cli("blowup", "check", "--n", "3", "--q", "2", "--round-trips", "200",
                           "--transfer-pairs", "500", report="blowup-check-report.json")
    assert code == EXIT_PASS
    assert report["metrics"]["fiber"] == {"skipped": True}
    assert report["metrics"]["round_trip_error"] <= 1e-12


def test_blowup_bad_codimension(run_cli):
    code, _ = run_cli("blowup", "check", "--n", "2", "--q", "3")
    assert code == EXIT_ERROR
