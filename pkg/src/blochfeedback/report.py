"""Writers for run outputs: trajectory CSV, profiles, rotation field, summary."""

from __future__ import annotations

import csv
from pathlib import Path

from . import omega_grid as og
from . import rotation_field as rf

TRAJECTORY_HEADER = ["t", "lyapunov", "u1", "u2", "linf_to_target"]


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_trajectory(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for r in records:
            w.writerow([_fmt(r.t), _fmt(r.lyapunov), _fmt(r.u1), _fmt(r.u2), _fmt(r.linf_to_target)])


def read_trajectory(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (float(v) if v != "" else None) for k, v in row.items()} for row in rows]


def write_summary(path, summary: dict) -> None:
    """``key: value`` lines, one per entry."""
    lines = []
    for key, val in summary.items():
        if isinstance(val, float):
            val = f"{val:.10g}"
        lines.append(f"{key}: {val}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if ":" in line:
            k, v = line.split(":", 1)
            out[k.strip()] = v.strip()
    return out


def write_run(result, out_dir, figures: bool = True) -> dict:
    """Write every output of a simulation into ``out_dir``; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectory": out / "trajectory.csv",
        "initial": out / "initial_profile.csv",
        "final": out / "final_profile.csv",
        "target": out / "target_profile.csv",
        "rotation": out / "rotation_field.csv",
        "report": out / "report.txt",
    }
    write_trajectory(paths["trajectory"], result.records)
    og.write_profile(paths["initial"], result.initial)
    og.write_profile(paths["final"], result.final)
    og.write_profile(paths["target"], result.setup.m_f)
    rf.write_field(paths["rotation"], result.setup.rotation)
    if result.lab_check is not None:
        paths["lab_check"] = out / "lab_frame_check.csv"
        with open(paths["lab_check"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "linf_lab_vs_m1"])
            for t, d in zip(result.lab_check["times"], result.lab_check["linf"]):
                w.writerow([repr(float(t)), repr(float(d))])
    write_summary(paths["report"], result.summary)
    if figures:
        from .figures import plot_lyapunov_controls, plot_profiles

        paths["fig_lyapunov"] = out / "lyapunov_controls.png"
        paths["fig_profiles"] = out / "profiles.png"
        plot_lyapunov_controls(result.records, paths["fig_lyapunov"])
        plot_profiles(result.initial, result.final, result.setup.m_f, paths["fig_profiles"])
    return paths


GNUPLOT_TEMPLATE = """\
# gnuplot script for the CSVs written by `blochfeedback simulate`
set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 900,700
set output '{out}/lyapunov_controls_gnuplot.png'
set multiplot layout 2,1
set logscale y
set ylabel 'L(t)'
plot '{out}/trajectory.csv' using 1:2 with lines title 'L'
unset logscale y
set xlabel 't'
set ylabel 'u'
plot '{out}/trajectory.csv' using 1:3 with lines title 'u1', \\
     '' using 1:4 with lines title 'u2'
unset multiplot
set output '{out}/profiles_gnuplot.png'
set multiplot layout 3,1
set xlabel 'omega'
do for [c=2:4] {{
  plot '{out}/initial_profile.csv' using 1:c with lines title 'initial', \\
       '{out}/final_profile.csv' using 1:c with lines title 'final', \\
       '{out}/target_profile.csv' using 1:c with lines dashtype 2 title 'target'
}}
unset multiplot
"""


def gnuplot_script(out_dir) -> str:
    return GNUPLOT_TEMPLATE.format(out=Path(out_dir).as_posix())
