import json
import subprocess
import sys

from stdglab.cli import main


def test_dump_defaults(capsys):
    assert main(["interior", "--dump-defaults"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["experiment"] == "interior" and cfg["d"] == 0.2


def test_run_writes_outputs(tmp_path, capsys):
    assert main(["bestapprox", "--levels", "2", "--output", str(tmp_path)]) == 0
    assert (tmp_path / "bestapprox.csv").exists()
    summary = json.loads((tmp_path / "bestapprox_summary.json").read_text())
    assert summary["summary"]["pass"] is True
    assert summary["config"]["levels"] == [8, 16]


def test_output_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("STDGLAB_OUTPUT_DIR", str(tmp_path / "env"))
    monkeypatch.setenv("STDGLAB_WORKERS", "2")
    assert main(["maxreg", "--levels", "2"]) == 0
    assert (tmp_path / "env" / "maxreg.csv").exists()


def test_vtk_snapshots(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"levels": [4]}))
    assert main(["convergence", "--config", str(cfg), "--output", str(tmp_path), "--vtk"]) == 0
    snaps = sorted((tmp_path / "vtk").glob("*.vtk"))
    assert len(snaps) == 5


def test_bound_violation_exits_2(tmp_path):
    cfg = tmp_path / "c.json"
    # an absurdly strict drift factor forces a violation
    cfg.write_text(json.dumps({"levels": [4, 8], "drift_factor": 0.01}))
    assert main(["bestapprox", "--config", str(cfg), "--output", str(tmp_path)]) == 2


def test_operational_errors_exit_1(tmp_path, capsys):
    assert main(["bestapprox", "--config", str(tmp_path / "nope.json")]) == 1
    assert "nope.json" in capsys.readouterr().err
    assert main(["bestapprox", "--bogus"]) == 1
    assert main(["frobnicate"]) == 1
    assert main([]) == 1
    assert main(["bestapprox", "--workers", "0", "--output", str(tmp_path)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"levels": [8]}))
    assert main(["interior", "--config", str(bad), "--output", str(tmp_path)]) == 1
    assert "d > 4h" in capsys.readouterr().err


def test_check_subcommand(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) >= 10 and all(line.startswith("PASS") for line in out)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stdglab", "smoothing", "--dump-defaults"],
                         capture_output=True, text=True, timeout=60)
    assert res.returncode == 0
    assert json.loads(res.stdout)["time_levels"] == [8, 16, 32, 64]
