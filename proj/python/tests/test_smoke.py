import json
import pathlib

import pytest

import rbsde

SCENARIOS = pathlib.Path(__file__).resolve().parents[2] / "scenarios"


def test_version_and_suites():
    assert rbsde.__version__ == "0.1.0"
    assert "comparison" in rbsde.suite_names()


def test_upper_touch():
    r = rbsde.solve(SCENARIOS / "upper_touch.json")
    assert r["ok"]
    assert r["root_value"] == pytest.approx(0.4, abs=1e-9)
    g = rbsde.dynkin(SCENARIOS / "upper_touch.json", mode="both")
    assert g["ok"]


def test_pinched_values():
    inst, plus = rbsde.value_process(SCENARIOS / "pinched.json")
    assert len(inst) == 15
    assert all(y == 0.7 for y in inst + plus)


def test_witness_plain_vs_system():
    g = rbsde.dynkin(SCENARIOS / "plus_jump_witness.json", mode="exact", plain=True)
    text = json.dumps(g)
    assert g["ok"]
    assert "plain_supinf" in text


def test_dict_scenario_and_barrier_override():
    s = json.loads((SCENARIOS / "american_put.json").read_text())
    free = rbsde.solve(s, barrier="none")
    low = rbsde.solve(s)
    assert low["root_value"] >= free["root_value"]


def test_validation_error():
    with pytest.raises(rbsde.RbsdeError) as info:
        rbsde.solve(SCENARIOS / "separation_violation.json")
    assert info.value.exit_code == 2
    assert info.value.kind == "validation"
    assert "separation violation" in str(info.value)


def test_verify_small():
    r = rbsde.verify(suites=["comparison"], trials=5, seed=3)
    assert r["ok"]
    assert r["suites"][0]["status"] == "pass"


def test_horizon():
    r = rbsde.horizon_study(SCENARIOS / "horizon_affine.json", a_max=6)
    assert r["ok"]
