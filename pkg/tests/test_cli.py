import csv
import json

import pytest

from darwin_certify import cli
from darwin_certify.scenario import load_scenario
from darwin_certify.pipeline import certify

EXPECTED_STATUS = {
    "perfect_broadcast_qubit_t3": 0,
    "noisy_broadcast_qubit_t1": 0,
    "finite_env_qubit": 0,
    "fully_depolarized": 1,
}
SSB_STATUS = {"ssb_qubit": 0, "ssb_noisy": 1, "ssb_wrong_basis": 1}


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_validate_whole_corpus(scenario_dir, capsys):
    for p in sorted(scenario_dir.glob("*.json")):
        assert run("validate", "--scenario", p) == 0
    assert "ok" in capsys.readouterr().out


@pytest.mark.parametrize("name, status", sorted(EXPECTED_STATUS.items()))
def test_certify_exit_status(scenario_dir, tmp_path, name, status):
    out = tmp_path / f"{name}.json"
    assert run("certify", "--scenario", scenario_dir / f"{name}.json", "--out", out) == status
    rep = json.loads(out.read_text())
    assert rep["verdict"] == ("EMERGED" if status == 0 else "NOT_CERTIFIED")
    for b in rep["bobs"]:
        assert "gap" in b and "worst_state_digest" in b
    with open(tmp_path / f"{name}.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == rep["t"]


def test_fully_depolarized_values(scenario_dir):
    rep = certify(load_scenario(scenario_dir / "fully_depolarized.json"))
    assert abs(rep["eta"]["value"] - 0.5) < 1e-8 and abs(rep["cutoff"]["p_hat"] - 0.75) < 1e-6
    assert all(not b["model"]["built"] for b in rep["bobs"])


@pytest.mark.parametrize("name, status", sorted(SSB_STATUS.items()))
def test_ssb_exit_status(scenario_dir, tmp_path, name, status):
    out = tmp_path / f"{name}.json"
    assert run("ssb", "--scenario", scenario_dir / f"{name}.json", "--out", out) == status
    rep = json.loads(out.read_text())
    assert rep["ssb"] is (status == 0)
    if status:
        assert rep["violations"]


def test_wrong_basis_names_violation(scenario_dir, tmp_path, capsys):
    run("ssb", "--scenario", scenario_dir / "ssb_wrong_basis.json", "--out", tmp_path / "r.json")
    assert "system" in capsys.readouterr().err


def test_validation_error_status(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"name": "bad",\n "dynamics": {"kind": "broadcast", "d_A": 2, "t": 1, "noise": 2}\n}\n')
    assert run("certify", "--scenario", p, "--out", tmp_path / "r.json") == 4
    assert "bad.json:2:" in capsys.readouterr().err
    assert not (tmp_path / "r.json").exists()
    assert run("validate", "--scenario", tmp_path / "missing.json") == 4


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        run("sweep", "--scenario", "x.json", "--param", "colour", "--from", 0, "--to", 1, "--steps", 2)
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run("certify", "--scenario", "x.json", "--seed", -3)
    assert exc.value.code == 2


def test_sweep_parameter_must_match_dynamics(scenario_dir, tmp_path):
    args = ("sweep", "--scenario", scenario_dir / "noisy_broadcast_qubit_t1.json", "--param", "coupling_angle",
            "--from", 0, "--to", 1, "--steps", 2, "--out", tmp_path / "s.csv")
    assert run(*args) == 4


def test_certify_is_deterministic(scenario_dir, tmp_path):
    scn = scenario_dir / "noisy_broadcast_qubit_t1.json"
    a, b = tmp_path / "a" / "r.json", tmp_path / "b" / "r.json"
    a.parent.mkdir()
    b.parent.mkdir()
    assert run("certify", "--scenario", scn, "--out", a) == run("certify", "--scenario", scn, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (a.parent / "r.model.bob0.json").read_bytes() == (b.parent / "r.model.bob0.json").read_bytes()
    assert a.with_suffix(".csv").read_bytes() == b.with_suffix(".csv").read_bytes()


def test_seed_override_changes_preparations(scenario_dir, tmp_path):
    scn = scenario_dir / "noisy_broadcast_qubit_t1.json"
    run("certify", "--scenario", scn, "--out", tmp_path / "a.json", "--seed", 1)
    run("certify", "--scenario", scn, "--out", tmp_path / "b.json", "--seed", 2)
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    assert a["seed"] == 1 and b["seed"] == 2 and a["verdict"] == b["verdict"]


def test_single_point_sweep(scenario_dir, tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run("sweep", "--scenario", scenario_dir / "noisy_broadcast_qubit_t1.json", "--param", "noise",
               "--from", 0.3, "--to", 0.3, "--steps", 1, "--out", out) == 0
    lines = out.read_bytes().split(b"\n")
    assert lines[0].startswith(b"index,value,eta") and len([x for x in lines if x]) == 2
    assert b"\r" not in out.read_bytes()
    assert "no crossing" in capsys.readouterr().out


def test_sweep_reports_crossing(scenario_dir, tmp_path, capsys):
    out = tmp_path / "s.csv"
    run("sweep", "--scenario", scenario_dir / "noisy_broadcast_qubit_t1.json", "--param", "noise",
        "--from", 0, "--to", 1, "--steps", 6, "--out", out)
    assert "between noise = 0.4 and 0.6" in capsys.readouterr().out
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["independent"] for r in rows] == ["true"] * 5 + ["false"]


def test_coupling_sweep_diamond_decreases(scenario_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("DARWIN_CERTIFY_THREADS", "2")
    out = tmp_path / "c.csv"
    run("sweep", "--scenario", scenario_dir / "finite_env_qubit.json", "--param", "coupling_angle",
        "--from", 0, "--to", 1.5707963267948966, "--steps", 5, "--out", out)
    with open(out, newline="") as fh:
        dia = [float(r["diamond"]) for r in csv.DictReader(fh)]
    assert all(b <= a + 1e-8 for a, b in zip(dia, dia[1:])) and dia[-1] < 1e-8


def test_emerged_implies_models(scenario_dir):
    for p in scenario_dir.glob("*.json"):
        rep = certify(load_scenario(p))
        if rep["verdict"] == "EMERGED":
            assert all(b["model"]["built"] and b["model"]["reproduces"] for b in rep["bobs"])


def test_solver_failure_exit_status(scenario_dir, tmp_path, monkeypatch):
    from darwin_certify import _lmi
    solve = _lmi.solve
    monkeypatch.setattr(_lmi, "solve", lambda *a, **k: solve(*a, **{**k, "max_newton": 5}))
    assert run("certify", "--scenario", scenario_dir / "noisy_broadcast_qubit_t1.json",
               "--out", tmp_path / "r.json") == 5
