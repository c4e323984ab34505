import json

import numpy as np
import pytest

from gwass import lab
from gwass.cli import main
from gwass.lab import CheckResult, SuiteReport, run_suite
from gwass.measures import DiscreteMeasure, load_measure, save_measure


def write_measure(tmp_path, name, atoms, dim=1):
    path = tmp_path / name
    save_measure(DiscreteMeasure.from_atoms(dim, atoms), path)
    return str(path)


@pytest.fixture
def dirac_files(tmp_path):
    mu = write_measure(tmp_path, "mu.json", [([0.0], 1.0)])
    nu = write_measure(tmp_path, "nu.json", [([3.0], 1.0)])
    return mu, nu


def test_cli_dist_value(dirac_files, capsys):
    mu, nu = dirac_files
    assert main(["dist", mu, nu, "--a", "1", "--b", "1", "--p", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == pytest.approx(2.0)
    assert out["removed_source_mass"] == pytest.approx(1.0)


def test_cli_dist_identical_files(dirac_files, capsys):
    mu, _ = dirac_files
    assert main(["dist", mu, mu, "--a", "1", "--b", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == 0.0


def test_cli_dist_empty_measure(tmp_path, capsys):
    empty = write_measure(tmp_path, "empty.json", [])
    nu = write_measure(tmp_path, "nu.json", [([0.0], 1.0)])
    assert main(["dist", empty, nu, "--a", "2", "--b", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(2.0)


def test_cli_error_exit_codes(tmp_path, capsys, dirac_files):
    mu, _ = dirac_files
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["dist", str(bad), mu, "--a", "1", "--b", "1"]) == 2
    missing = str(tmp_path / "nope.json")
    assert main(["dist", missing, mu, "--a", "1", "--b", "1"]) == 2
    mismatched = write_measure(tmp_path, "d2.json", [([0.0, 0.0], 1.0)], dim=2)
    assert main(["dist", mu, mismatched, "--a", "1", "--b", "1"]) == 2
    capsys.readouterr()


def test_cli_wasserstein_and_mass_mismatch(tmp_path, capsys, dirac_files):
    mu, nu = dirac_files
    assert main(["wasserstein", mu, nu, "--p", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(3.0)
    heavy = write_measure(tmp_path, "heavy.json", [([1.0], 2.0)])
    assert main(["wasserstein", mu, heavy, "--p", "2"]) == 2


def test_cli_plan_csv_export(tmp_path, capsys, dirac_files):
    mu, _ = dirac_files
    nu = write_measure(tmp_path, "near.json", [([0.5], 1.0)])
    out = tmp_path / "plan.csv"
    assert main(["dist", mu, nu, "--a", "1", "--b", "1", "--plan-csv", str(out)]) == 0
    capsys.readouterr()
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "i,j,flow"
    assert lines[1] == "0,0,1.0"


def test_cli_oracle_and_prokhorov(tmp_path, capsys, dirac_files):
    mu, nu = dirac_files
    assert main(["oracle", mu, nu, "--a", "1", "--b", "1", "--grid-steps", "50"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(2.0)
    split = write_measure(tmp_path, "split.json", [([-0.2], 0.5), ([0.4], 0.5)])
    assert main(["prokhorov", mu, split]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(0.4)


def test_cli_verify_pass_and_json(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["verify", "prokhorov", "--json", str(out)]) == 0
    blob = json.loads(out.read_text())
    assert blob["passed"] is True
    assert all(c["statement"] for c in blob["checks"])
    capsys.readouterr()


def test_cli_verify_failure_exit_code(monkeypatch, capsys):
    failing = SuiteReport("stub", (CheckResult("x", "forced failure", 1.0, 0.0, 0.0),))
    monkeypatch.setattr(lab, "run_suite", lambda *a, **k: failing)
    assert main(["verify", "prokhorov"]) == 1
    capsys.readouterr()


def test_cli_verify_unknown_suite():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "everything"])
    assert exc.value.code == 2


def test_report_json_deterministic(capsys):
    r1 = run_suite("metrization", seed=7)
    r2 = run_suite("metrization", seed=7)
    assert json.dumps(r1.to_json(), sort_keys=True) == json.dumps(r2.to_json(), sort_keys=True)
    r3 = run_suite("metric", seed=3, trials=20)
    r4 = run_suite("metric", seed=3, trials=20)
    assert json.dumps(r3.to_json(), sort_keys=True) == json.dumps(r4.to_json(), sort_keys=True)


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("GWASS_SEED", "99")
    assert lab.resolve_seed(None) == 99
    assert lab.resolve_seed(5) == 5
    monkeypatch.delenv("GWASS_SEED")
    assert lab.resolve_seed(None) == lab.DEFAULT_SEED


def test_every_check_carries_statement():
    for name in ("examples", "prokhorov", "metrization"):
        report = run_suite(name)
        assert report.checks
        assert all(c.statement.strip() for c in report.checks)
        assert report.passed == all(c.passed for c in report.checks)


def test_cli_simulate_translation(tmp_path, capsys):
    mu0 = write_measure(tmp_path, "init.json",
                        [([x], 0.125) for x in np.linspace(-1, -0.1, 8)])
    config = {
        "initial_measure": mu0,
        "velocity": {"base": {"kind": "constant", "c": [0.5]},
                     "kernel": {"kind": "zero"}},
        "source": {"kind": "zero"},
        "T": 1.0,
        "level": 5,
        "params": {"a": 1.0, "b": 1.0, "p": 1.0},
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    out_dir = tmp_path / "out"
    assert main(["simulate", str(cfg_path), "--output-dir", str(out_dir)]) == 0
    capsys.readouterr()
    snaps = sorted(out_dir.glob("snapshot_*.json"))
    assert len(snaps) == 33
    first = load_measure(snaps[0])
    last = load_measure(snaps[-1])
    assert np.allclose(last.positions, first.positions + 0.5, atol=1e-12)
    masses = (out_dir / "masses.csv").read_text().strip().splitlines()
    assert masses[0] == "t,mass"
    assert len(masses) == 34
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["level"] == 5


def test_cli_simulate_with_tables(tmp_path, capsys):
    mu0 = write_measure(tmp_path, "init.json",
                        [([x], 0.25) for x in np.linspace(-1, -0.25, 4)])
    config = {
        "initial_measure": mu0,
        "velocity": {"base": {"kind": "constant", "c": [0.4]},
                     "kernel": {"kind": "bump", "radius": 0.5, "height": 0.2}},
        "source": {"kind": "bump_quadrature", "radius": 0.25, "sites": 5,
                   "mass": 0.1, "modulation": {"kind": "constant", "value": 1.0}},
        "T": 1.0,
        "level": 3,
        "k_range": [3, 5],
        "dependence": {"shift": 0.05, "level": 3},
        "params": {"a": 1.0, "b": 1.0, "p": 1.0},
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    out_dir = tmp_path / "out"
    assert main(["simulate", str(cfg_path), "--output-dir", str(out_dir)]) == 0
    capsys.readouterr()
    cauchy = (out_dir / "cauchy.csv").read_text().strip().splitlines()
    assert cauchy[0] == "k,D_k,bound"
    assert len(cauchy) == 4  # rows for k = 3, 4, 5
    ds = [float(line.split(",")[1]) for line in cauchy[1:]]
    assert ds == sorted(ds, reverse=True)
    dep = (out_dir / "dependence.csv").read_text().strip().splitlines()
    assert dep[0] == "t,value,bound"
    assert len(dep) == 10
    masses = [float(line.split(",")[1])
              for line in (out_dir / "masses.csv").read_text().strip().splitlines()[1:]]
    assert all(b >= a - 1e-12 for a, b in zip(masses, masses[1:]))
    assert masses[-1] <= masses[0] + 0.1 + 1e-9


def test_cli_simulate_invalid_config_lists_fields(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"level": -1, "T": 0, "k_range": [5, 3]}))
    assert main(["simulate", str(cfg_path)]) == 2
    err = capsys.readouterr().err
    for fieldname in ("initial_measure", "velocity", "source", "level", "T", "k_range"):
        assert fieldname in err
