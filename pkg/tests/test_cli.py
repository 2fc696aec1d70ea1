import math
import subprocess
import sys

import numpy as np
import pytest

from blochfeedback import __version__
from blochfeedback import omega_grid as og
from blochfeedback import report
from blochfeedback.cli import main
from blochfeedback.geometry import E3
from blochfeedback.scenarios import paper_initial, paper_target

SMALL = """
[scenario]
name = paper
[grid]
n_cells = 20
[timing]
steps_per_period = 200
periods = 4
[run]
record_stride = 10
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(SMALL)
    return p


def err_line(capsys):
    lines = capsys.readouterr().err.strip().splitlines()
    assert len(lines) == 1
    return lines[0]


def test_simulate_writes_outputs(tmp_path, small_cfg, capsys):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(small_cfg), "--out", str(out), "--lab-frame-check"]) == 0
    for name in (
        "trajectory.csv",
        "initial_profile.csv",
        "final_profile.csv",
        "target_profile.csv",
        "rotation_field.csv",
        "report.txt",
        "lab_frame_check.csv",
        "lyapunov_controls.png",
        "profiles.png",
    ):
        assert (out / name).is_file(), name
    rows = report.read_trajectory(out / "trajectory.csv")
    assert len(rows) == 800 // 10 + 1
    assert (out / "trajectory.csv").read_text().splitlines()[0] == "t,lyapunov,u1,u2,linf_to_target"
    filled = [r for r in rows if r["linf_to_target"] is not None]
    assert len(filled) == 3
    summary = report.read_summary(out / "report.txt")
    assert int(summary["steps"]) == 800
    assert float(summary["lab_check_max_linf"]) <= 1e-10
    assert "L(0)" in capsys.readouterr().out


def test_simulate_is_deterministic(tmp_path, small_cfg):
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(small_cfg), "--out", str(tmp_path / d), "--no-figures"]) == 0
    for name in ("trajectory.csv", "final_profile.csv", "rotation_field.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_paper_record_count(tmp_path):
    out = tmp_path / "paper"
    assert main(["simulate", "--scenario", "paper", "--out", str(out), "--no-figures"]) == 0
    assert len(report.read_trajectory(out / "trajectory.csv")) == 2001


def test_stride_flag(tmp_path, small_cfg):
    assert main(["simulate", "--config", str(small_cfg), "--stride", "40", "--out", str(tmp_path), "--no-figures"]) == 0
    assert len(report.read_trajectory(tmp_path / "trajectory.csv")) == 21


def test_step_not_dividing_period(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(f"[scenario]\nname = paper\n[timing]\nstep = {2 * math.pi / 333.5!r}\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    line = err_line(capsys)
    assert line.startswith("error[E_CONFIG]:") and "must divide the period" in line


def test_missing_profile_file(tmp_path, capsys):
    cfg = tmp_path / "files.ini"
    cfg.write_text(f"[scenario]\nname = files\nm0_path = {tmp_path / 'nope.csv'}\nmf_path = {tmp_path / 'nope.csv'}\n")
    assert main(["simulate", "--config", str(cfg)]) == 4
    assert err_line(capsys).startswith("error[E_IO]:")


def test_missing_config(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "none.ini")]) == 4
    assert "not found" in err_line(capsys)


def test_no_scenario(capsys):
    assert main(["simulate"]) == 2
    assert "no scenario" in err_line(capsys)


def test_refine_equilibrium(tmp_path, capsys):
    cfg = tmp_path / "eq.ini"
    cfg.write_text(SMALL.replace("name = paper", "name = equilibrium").replace("periods = 4", "periods = 2"))
    assert main(["refine", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    values = {k: float(v) for k, v in (line.split(":") for line in out.strip().splitlines())}
    assert values["grid_linf_delta"] <= 1e-9 and values["step_linf_delta"] <= 1e-9
    assert (tmp_path / "refine_report.txt").is_file()


def test_rotation_field_paper_target(tmp_path, capsys):
    g = og.OmegaGrid(0.0, 1.0, 100)
    og.write_profile(tmp_path / "mf.csv", og.SpinProfile.from_function(g, paper_target))
    assert main(["rotation-field", str(tmp_path / "mf.csv"), "--out", str(tmp_path)]) == 0
    rep = report.read_summary(tmp_path / "rotation_report.txt")
    assert float(rep["flattening_residual"]) <= 1e-12
    assert (tmp_path / "rotation_field.csv").is_file()
    assert main(["rotation-field", str(tmp_path / "mf.csv"), "--method", "ode", "--out", str(tmp_path / "o")]) == 0
    assert float(report.read_summary(tmp_path / "o" / "rotation_report.txt")["flattening_residual"]) <= 1e-6


def test_rotation_field_south_pole(tmp_path):
    g = og.OmegaGrid(0.0, 1.0, 10)
    og.write_profile(tmp_path / "mf.csv", og.SpinProfile.constant(g, -E3))
    assert main(["rotation-field", str(tmp_path / "mf.csv"), "--out", str(tmp_path)]) == 0
    rep = report.read_summary(tmp_path / "rotation_report.txt")
    assert float(rep["flattening_residual"]) == 0.0
    field = og.read_table(tmp_path / "rotation_field.csv", ["omega"] + [f"r{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)])
    mats = field[:, 1:].reshape(-1, 3, 3)
    np.testing.assert_allclose(mats @ E3, np.tile(E3, (11, 1)), atol=1e-15)


def test_rotation_field_off_sphere(tmp_path, capsys):
    g = og.OmegaGrid(0.0, 1.0, 10)
    vals = np.tile(-E3, (11, 1))
    vals[4] *= 1.001
    og.write_profile(tmp_path / "bad.csv", og.SpinProfile(g, vals))
    assert main(["rotation-field", str(tmp_path / "bad.csv")]) != 0
    assert "node 5" in err_line(capsys)


def test_lyapunov_command(tmp_path, capsys):
    g = og.OmegaGrid(0.0, 1.0, 100)
    og.write_profile(tmp_path / "m0.csv", og.SpinProfile.from_function(g, paper_initial))
    og.write_profile(tmp_path / "mf.csv", og.SpinProfile.from_function(g, paper_target))
    assert main(["lyapunov", str(tmp_path / "m0.csv"), str(tmp_path / "mf.csv")]) == 0
    out = capsys.readouterr().out
    value = float(out.splitlines()[0].split(":")[1])
    assert value == pytest.approx(0.1929, abs=0.05)
    assert main(["lyapunov", str(tmp_path / "mf.csv"), str(tmp_path / "mf.csv")]) == 0
    assert abs(float(capsys.readouterr().out.splitlines()[0].split(":")[1])) <= 1e-12


def test_gnuplot_and_version(tmp_path, capsys):
    assert main(["gnuplot", "--out", "results", "-o", str(tmp_path / "plot.gp")]) == 0
    text = (tmp_path / "plot.gp").read_text()
    assert "results/trajectory.csv" in text
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == __version__


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "blochfeedback", "version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == __version__
