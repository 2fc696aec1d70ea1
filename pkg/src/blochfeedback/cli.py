"""Command line interface.

Exit codes: 0 success, 2 configuration or input error, 3 runtime/numeric
error, 4 I/O error.  Errors print a single line ``error[CODE]: message``.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import omega_grid as og
from . import report
from . import rotation_field as rf
from . import simulator as sim
from .scenarios import SCENARIOS, SCHEMES, ConfigError, SimConfig, load_config

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("blochfeedback")


class CLIError(Exception):
    def __init__(self, code: str, exit_code: int, message: str):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


def _build_config(args) -> SimConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        cfg = load_config(path)
        if args.scenario:
            cfg = replace(cfg, scenario=args.scenario)
    elif args.scenario:
        cfg = SimConfig(scenario=args.scenario)
    else:
        raise ConfigError("no scenario selected: pass --scenario or --config")
    upd = {}
    if args.out:
        upd["out_dir"] = args.out
    if args.stride is not None:
        upd["record_stride"] = args.stride
    if args.method:
        upd["method"] = args.method
    if args.scheme:
        upd["scheme"] = args.scheme
    if getattr(args, "lab_frame_check", False):
        upd["lab_frame_check"] = True
    return replace(cfg, **upd)


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    setup = sim.prepare(cfg)
    result = sim.run(setup)
    out = setup.config.out_dir or "out"
    paths = report.write_run(result, out, figures=not args.no_figures)
    s = result.summary
    print(f"L(0) = {s['lyapunov_initial']:.6g}   L(T_f) = {s['lyapunov_final']:.6g}   "
          f"steps = {s['steps']}   wall = {s['wall_time_s']:.2f}s")
    if result.lab_check is not None:
        print(f"lab-frame check: max L-inf = {result.lab_check['max_linf']:.3e}")
    print(f"outputs written to {paths['report'].parent}")
    return EXIT_OK


def cmd_refine(args) -> int:
    cfg = _build_config(args)
    which = args.which
    study = sim.refinement_study(cfg, grid=which in ("grid", "both"), step_=which in ("step", "both"))
    for k, v in study.items():
        print(f"{k}: {v:.6e}")
    if cfg.out_dir:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        report.write_summary(Path(cfg.out_dir) / "refine_report.txt", study)
    return EXIT_OK


def cmd_rotation_field(args) -> int:
    target = og.read_profile(args.target)
    build = rf.build_ode if args.method == "ode" else rf.build_sweep
    field_ = build(target)
    check = rf.validate(field_, target)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    rf.write_field(out / "rotation_field.csv", field_)
    report.write_summary(out / "rotation_report.txt", {"method": args.method, **check})
    for k, v in check.items():
        print(f"{k}: {v:.6e}")
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    prof = og.read_profile(args.profile)
    target = og.read_profile(args.target)
    if prof.grid != target.grid:
        raise ConfigError("profile and target are on different grids")
    if args.rotation:
        field_ = rf.read_field(args.rotation)
    else:
        field_ = (rf.build_ode if args.method == "ode" else rf.build_sweep)(target)
    n_prof = field_.apply(prof)
    value = og.lyapunov(n_prof)
    d = og.norms(prof, target)
    print(f"lyapunov: {value!r}")
    print(f"linf_to_target: {d['linf']!r}")
    return EXIT_OK


def cmd_gnuplot(args) -> int:
    text = report.gnuplot_script(args.out or "out")
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_version(args) -> int:
    print(__version__)
    return EXIT_OK


def _run_options(p):
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--scenario", choices=SCENARIOS, help="builtin scenario (overrides the config)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--stride", type=int, help="record every K steps")
    p.add_argument("--method", choices=("sweep", "ode"), help="rotation-field construction")
    p.add_argument("--scheme", choices=SCHEMES, help="time-stepping variant")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blochfeedback", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the closed loop and write CSVs, report and figures")
    _run_options(p)
    p.add_argument("--lab-frame-check", action="store_true",
                   help="also integrate in the lab frame with explicit pi pulses and compare")
    p.add_argument("--no-figures", action="store_true", help="skip the matplotlib figures")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("refine", help="grid (2N) and step (h/2) refinement study")
    _run_options(p)
    p.add_argument("--which", choices=("grid", "step", "both"), default="both")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("rotation-field", help="build and validate R(omega) for a target profile CSV")
    p.add_argument("target")
    p.add_argument("--method", choices=("sweep", "ode"), default="sweep")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rotation_field)

    p = sub.add_parser("lyapunov", help="Lyapunov value of a profile against a target")
    p.add_argument("profile")
    p.add_argument("target")
    p.add_argument("--method", choices=("sweep", "ode"), default="sweep")
    p.add_argument("--rotation", help="rotation-field CSV to use instead of building one")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("gnuplot", help="print a gnuplot script for the simulate outputs")
    p.add_argument("--out", help="directory holding the simulate outputs")
    p.add_argument("-o", "--output", help="write the script here instead of stdout")
    p.set_defaults(func=cmd_gnuplot)

    p = sub.add_parser("version")
    p.set_defaults(func=cmd_version)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = args.func(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return code
    except ConfigError as exc:
        err = CLIError("E_CONFIG", EXIT_CONFIG, str(exc))
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        err = CLIError("E_IO", EXIT_IO, str(exc))
    except ArithmeticError as exc:
        err = CLIError("E_NUMERIC", EXIT_RUNTIME, str(exc))
    except ValueError as exc:
        err = CLIError("E_INPUT", EXIT_CONFIG, str(exc))
    except OSError as exc:
        err = CLIError("E_IO", EXIT_IO, str(exc))
    msg = " ".join(str(err).split())
    print(f"error[{err.code}]: {msg}", file=sys.stderr)
    return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
