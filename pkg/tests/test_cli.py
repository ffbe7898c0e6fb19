import json
import subprocess
import sys

import numpy as np
import pytest

from bosonic_ds.cli import main
from bosonic_ds.io import save_matrix
from bosonic_ds.symplectic import beam_splitter, two_mode_squeezer


def write_config(tmp_path, **overrides):
    cfg = {
        "state1": "vacuum",
        "state2": "vacuum",
        "theta": float(np.pi / 4),
        "cutoff": 10,
        "seed": 5,
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_ds_run_vacuum(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "report.json"
    assert main(["ds-run", "--config", str(cfg), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["epsilon"] <= 1e-8
    assert report["config"]["seed"] == 5
    assert report["n"] == 1


def test_ds_run_interference_pair(tmp_path):
    cfg = write_config(tmp_path, state1="fock:1", state2="fock:1", cutoff=6)
    out = tmp_path / "report.json"
    assert main(["ds-run", "--config", str(cfg), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["epsilon"] > 0.5
    assert report["bound1"] is None


def test_ds_run_deterministic_bytes(tmp_path):
    cfg = write_config(tmp_path, state1="thermal:0.3",
                       state2={"kind": "mixture", "components": [
                           {"weight": 0.8, "state": "vacuum"},
                           {"weight": 0.2, "state": "fock:2"}]},
                       cutoff=12)
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    assert main(["ds-run", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["ds-run", "--config", str(cfg), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_ds_run_flag_overrides(tmp_path):
    cfg = write_config(tmp_path, theta=0.3)
    out = tmp_path / "report.json"
    assert main(["ds-run", "--config", str(cfg), "--theta", "0.6",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["theta"] == pytest.approx(0.6)


def test_ds_run_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["ds-run", "--config", str(bad)]) == 1
    assert "error:" in capsys.readouterr().err


def test_ds_run_missing_key(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"state1": "vacuum", "theta": 0.7}))
    assert main(["ds-run", "--config", str(path)]) == 1


def test_ds_run_trivial_theta(tmp_path, capsys):
    cfg = write_config(tmp_path, theta=0.0)
    assert main(["ds-run", "--config", str(cfg)]) == 1


def test_ds_run_bound_failure_exit_code(tmp_path, capsys):
    # shrinking the convention tolerances to nothing makes the identity
    # check fail on numerical noise, exercising the exit-2 path
    cfg = write_config(tmp_path, state1="thermal:0.3", cutoff=12,
                       tolerances={"convention_rel": 1e-300,
                                   "convention_abs": 1e-300})
    out = tmp_path / "report.json"
    assert main(["ds-run", "--config", str(cfg), "--out", str(out)]) == 2
    report = json.loads(out.read_text())
    assert "invariant_failure" in report


def test_ds_run_rejects_bad_tolerance(tmp_path, capsys):
    cfg = write_config(tmp_path, tolerances={"uncertainty": -1.0})
    assert main(["ds-run", "--config", str(cfg)]) == 1


def test_constants_single_row(capsys):
    assert main(["constants", "--theta-min", str(np.pi / 4),
                 "--theta-max", str(np.pi / 4), "--steps", "1"]) == 0
    captured = capsys.readouterr()
    lines = captured.out.strip().splitlines()
    assert lines[0] == "theta,curve,c1,c2_shape,c3"
    row = lines[1].split(",")
    assert float(row[1]) == pytest.approx(2.0)
    assert "quoted" in captured.err


def test_constants_symmetry(tmp_path):
    out = tmp_path / "sweep.csv"
    theta = 0.4
    assert main(["constants", "--theta-min", str(theta),
                 "--theta-max", str(np.pi / 2 - theta), "--steps", "2",
                 "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()[1:]
    curve_a = float(rows[0].split(",")[1])
    curve_b = float(rows[1].split(",")[1])
    assert curve_a == pytest.approx(curve_b, abs=1e-12)


def test_constants_zero_steps(capsys):
    assert main(["constants", "--theta-min", "0.3", "--theta-max", "0.5",
                 "--steps", "0"]) == 1


def test_constants_json_notes(tmp_path):
    out = tmp_path / "sweep.json"
    assert main(["constants", "--theta-min", "0.3", "--theta-max", "0.5",
                 "--steps", "2", "--format", "json", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["notes"]["c1_prefactor_quoted_50_50"] == 46.2
    assert data["notes"]["c1_prefactor_direct_50_50"] == pytest.approx(51.0646,
                                                                       abs=1e-3)


def test_classify_identity(tmp_path, capsys):
    path = tmp_path / "eye.json"
    save_matrix(np.eye(4), path)
    assert main(["classify", "--matrix", str(path)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["verdict"] == "local"


def test_classify_beam_splitter(tmp_path, capsys):
    path = tmp_path / "bs.json"
    save_matrix(beam_splitter(np.pi / 4, 1), path)
    assert main(["classify", "--matrix", str(path)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["verdict"] == "beam_splitter_like"
    assert data["alpha"] == pytest.approx(1.0)


def test_classify_squeezer_witness(tmp_path, capsys):
    path = tmp_path / "sq.json"
    save_matrix(two_mode_squeezer(0.6), path)
    assert main(["classify", "--matrix", str(path)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["verdict"] == "not_preserving"
    assert "witness_gamma" in data


def test_classify_missing_file(capsys):
    assert main(["classify", "--matrix", "/nonexistent/m.json"]) == 1


def test_witness_lines(capsys):
    assert main(["witness", "--state", "fock:1", "--theta", str(np.pi / 4),
                 "--cutoff", "8"]) == 0
    assert capsys.readouterr().out.startswith("non-gaussian")
    assert main(["witness", "--state", "thermal:0.5", "--theta", str(np.pi / 4),
                 "--cutoff", "12"]) == 0
    assert capsys.readouterr().out.startswith("gaussian")


def test_witness_trivial_angle(capsys):
    assert main(["witness", "--state", "vacuum", "--theta", "0.0"]) == 1
    assert "trivial splitter" in capsys.readouterr().err


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "bosonic_ds.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "ds-run" in proc.stdout


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out
    assert "all checks passed" in out


def test_selftest_catches_corrupted_fixture(tmp_path, monkeypatch, capsys):
    import shutil

    from bosonic_ds import states

    shutil.copytree(states.golden_dir(), tmp_path / "fixtures")
    corrupt = json.loads((tmp_path / "fixtures" / "fock1.json").read_text())
    corrupt["real"][1][1] = 0.25   # trace no longer 1
    (tmp_path / "fixtures" / "fock1.json").write_text(json.dumps(corrupt))
    monkeypatch.setattr(states, "golden_dir", lambda: tmp_path / "fixtures")
    assert main(["selftest"]) == 1
    assert "[FAIL] golden fixture integrity" in capsys.readouterr().out
