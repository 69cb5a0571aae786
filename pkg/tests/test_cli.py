"""End-to-end command-line checks through main(argv)."""

import json
from pathlib import Path

import pytest

from modcap.cli import main
from modcap.instance import load_instance

DATA = Path(__file__).parent / "data"
DEMO = str(DATA / "chain_demo.json")


@pytest.fixture
def gen_instance(tmp_path):
    path = tmp_path / "gen.json"
    code = main(["gen", "--seed", "5", "--n-points", "12", "--n-measures", "5",
                 "--out", str(path)])
    assert code == 0
    return str(path)


def test_gen_then_solve_then_duality(gen_instance, tmp_path, capsys):
    out_csv = tmp_path / "res.csv"
    code = main(["solve", "--instance", gen_instance, "--seed", "11",
                 "--out", str(out_csv)])
    assert code == 0
    text = capsys.readouterr().out
    assert "modulus:" in text
    assert "seed: 11" in text
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0].startswith("instance,family,p,")
    assert len(lines) == 2
    assert lines[1].split(",")[-1] == "11"

    code = main(["duality", "--instance", gen_instance])
    assert code == 0
    assert "duality certificate ok" in capsys.readouterr().out


def test_solve_path_family_reports_enumeration(capsys):
    code = main(["solve", "--instance", DEMO, "--family", "lr"])
    assert code == 0
    text = capsys.readouterr().out
    assert "generated paths: 1" in text
    # The sole route projects to the line measure (1/4, 1/2, 1/2, 1/4);
    # with one constraint Mod_2 = 1 / sum(mu^2 / m) = 1 / 2.5.
    assert "modulus: 0.4" in text


def test_invalid_inputs_exit_2(tmp_path, capsys):
    assert main(["solve", "--instance", str(tmp_path / "ghost.json")]) == 2
    assert "not found" in capsys.readouterr().err

    assert main(["solve", "--instance", DEMO, "--family", "nope"]) == 2
    assert "no family named 'nope'" in capsys.readouterr().err

    assert main(["solve", "--instance", DEMO, "--family", "lr", "--p", "1.0"]) == 2
    assert main(["solve"]) == 2
    capsys.readouterr()
    assert main(["curve", "mult", "--instance", DEMO, "--curve", "ghost"]) == 2
    assert "no curve named 'ghost'" in capsys.readouterr().err


def test_unconverged_solver_exits_3(gen_instance, capsys):
    code = main(["solve", "--instance", gen_instance, "--max-iter", "1"])
    assert code == 3
    assert "failed to converge" in capsys.readouterr().err


def test_unreachable_certificate_exits_4(gen_instance, capsys):
    code = main(["duality", "--instance", gen_instance, "--cert-tol", "1e-18"])
    assert code == 4
    assert "duality certificate FAILED" in capsys.readouterr().out


def test_curve_actions(tmp_path, capsys):
    assert main(["curve", "mult", "--instance", DEMO, "--curve", "c0"]) == 0
    doc = json.loads(capsys.readouterr().out.split("seed: 0\n", 1)[1])
    assert doc["multiplicity"] == [[0, 1, 1], [1, 2, 1], [2, 3, 1]]
    assert doc["length"] == pytest.approx(1.5)

    out = tmp_path / "resampled.json"
    assert main(["curve", "resample", "--instance", DEMO, "--curve", "c0",
                 "--out", str(out)]) == 0
    variant = load_instance(out)
    assert "c0.resampled" in variant.curves
    assert variant.curves["c0.resampled"].times == (0.0, 1 / 3, 2 / 3, 1.0)

    assert main(["curve", "jmap", "--instance", DEMO, "--curve", "c1",
                 "--out", str(out)]) == 0
    variant = load_instance(out)
    fam = variant.families["c1.jmap"]
    assert fam.kind == "explicit" and len(fam.measures) == 1
    capsys.readouterr()


def test_plan_actions(tmp_path, capsys):
    assert main(["plan", "check", "--instance", DEMO]) == 0
    assert "test plan: True" in capsys.readouterr().out

    out = tmp_path / "improved.json"
    assert main(["plan", "improve", "--instance", DEMO, "--eps", "0.1",
                 "--out", str(out)]) == 0
    variant = load_instance(out)
    assert "pl.improved" in variant.plans
    capsys.readouterr()

    assert main(["plan", "stretch", "--instance", DEMO, "--eps", "0.25",
                 "--n-tau", "8", "--out", str(out)]) == 0
    variant = load_instance(out)
    assert "pl.stretch" in variant.plans
    assert "exact averaged marginal sup" in capsys.readouterr().out


def test_grad_check_flags_charged_violations(capsys):
    # pos jumps along both demo curves while the zero column never
    # pays, so the plan charges violators with probability one.
    code = main(["grad", "check", "--instance", DEMO, "--family", "traced",
                 "--f", "pos", "--g", "zero", "--plans", "pl"])
    assert code == 4
    text = capsys.readouterr().out
    assert "violations: 2" in text
    assert "violating probability 1.0" in text
    assert "test-plan certificate FAILED" in text

    # A generous gradient passes and exits cleanly.
    code = main(["grad", "check", "--instance", DEMO, "--family", "traced",
                 "--f", "zero", "--g", "one", "--plans", "pl"])
    assert code == 0
    assert "violations: 0" in capsys.readouterr().out


def test_selftest_subset_runs(capsys):
    assert main(["selftest", "--criteria", "1"]) == 0
    text = capsys.readouterr().out
    assert "criterion 1 PASS" in text
    assert "all 1 criteria passed" in text
