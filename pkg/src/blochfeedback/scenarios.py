"""Builtin scenarios and the run configuration file.

Config files are INI-style (``configparser``)::

    [scenario]
    name = paper            ; paper | equator | equilibrium | files
    m0_path = ...           ; files only
    mf_path = ...           ; files only
    rotation_path = ...     ; optional constant/explicit R override

    [grid]
    omega_lo = 0.0
    omega_hi = 1.0
    n_cells = 100

    [timing]
    period = 6.283185307179586   ; defaults to 2 pi / (omega_hi - omega_lo)
    step = 0.006283185307179587  ; or steps_per_period = 1000
    final_time = 125.66370614359172 ; or periods = 20

    [run]
    method = sweep          ; sweep | ode
    scheme = split          ; split | euler
    record_stride = 10
    lab_frame_check = false

    [output]
    dir = out

Values left out of ``[grid]`` and ``[timing]`` come from the selected builtin
scenario; the ``files`` scenario has no grid defaults (the grid is read from
the profile files).
"""

from __future__ import annotations

import configparser
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import omega_grid as og
from .geometry import E1

SCENARIOS = ("paper", "equator", "equilibrium", "files")
METHODS = ("sweep", "ode")
SCHEMES = ("split", "euler")
DIVISIBILITY_RTOL = 1e-9


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def paper_initial(omega):
    c8 = math.cos(math.pi / 8)
    z = -c8 + 0.05 * (1.0 - c8 * np.cos(omega * math.pi / 2))
    return np.stack([np.zeros_like(z), -np.sqrt(1.0 - z**2), z], axis=-1)


def paper_target(omega):
    c16 = math.cos(math.pi / 16)
    z = -c16 + 0.1 * (1.0 - c16 * np.sin(omega * math.pi / 4))
    return np.stack([-np.sqrt(1.0 - z**2), np.zeros_like(z), z], axis=-1)


# constant R with R e1 = -e3, used against the target M_f = e1
EQUATOR_ROTATION = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
EQUATOR_N0 = np.array([0.0, 0.6, 0.8])


@dataclass(frozen=True)
class Scenario:
    name: str
    m0: Callable[[og.OmegaGrid], og.SpinProfile]
    m_f: Callable[[og.OmegaGrid], og.SpinProfile]
    rotation: Callable[[og.OmegaGrid], np.ndarray] | None = None
    omega_lo: float = 0.0
    omega_hi: float = 1.0
    n_cells: int = 100
    steps_per_period: int = 1000
    periods: int = 20


def paper_scenario() -> Scenario:
    return Scenario(
        "paper",
        m0=lambda g: og.SpinProfile.from_function(g, paper_initial),
        m_f=lambda g: og.SpinProfile.from_function(g, paper_target),
    )


def equilibrium_scenario() -> Scenario:
    """Paper target used as its own initial profile."""
    return Scenario(
        "equilibrium",
        m0=lambda g: og.SpinProfile.from_function(g, paper_target),
        m_f=lambda g: og.SpinProfile.from_function(g, paper_target),
    )


def equator_scenario() -> Scenario:
    """Target on the equator (``M_f = e1``) with an initial state that the
    feedback cannot see: ``N_0`` is constant in span(e2, e3)."""
    m0 = EQUATOR_ROTATION.T @ EQUATOR_N0
    return Scenario(
        "equator",
        m0=lambda g: og.SpinProfile.constant(g, m0),
        m_f=lambda g: og.SpinProfile.constant(g, E1),
        rotation=lambda g: np.tile(EQUATOR_ROTATION, (g.n_nodes, 1, 1)),
    )


BUILTIN = {
    "paper": paper_scenario,
    "equator": equator_scenario,
    "equilibrium": equilibrium_scenario,
}


@dataclass(frozen=True)
class SimConfig:
    scenario: str = "paper"
    omega_lo: float | None = None
    omega_hi: float | None = None
    n_cells: int | None = None
    period: float | None = None
    step: float | None = None
    final_time: float | None = None
    m0_path: str | None = None
    mf_path: str | None = None
    rotation_path: str | None = None
    method: str = "sweep"
    scheme: str = "split"
    record_stride: int = 10
    lab_frame_check: bool = False
    out_dir: str | None = None
    _warnings: tuple = field(default=(), compare=False, repr=False)

    @property
    def grid(self) -> og.OmegaGrid:
        return og.OmegaGrid(self.omega_lo, self.omega_hi, self.n_cells)

    @property
    def steps_per_period(self) -> int:
        return int(round(self.period / self.step))

    @property
    def n_periods(self) -> int:
        return int(round(self.final_time / self.period))

    @property
    def n_steps(self) -> int:
        return self.steps_per_period * self.n_periods

    @property
    def h(self) -> float:
        """Step size actually used, ``period / steps_per_period``."""
        return self.period / self.steps_per_period


def resolve(cfg: SimConfig) -> SimConfig:
    """Fill defaults from the scenario and validate every invariant.

    Raises ``ConfigError`` listing all problems found.
    """
    errors = []
    notes = []
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"scenario: unknown '{cfg.scenario}' (choose from {', '.join(SCENARIOS)})")
    if cfg.method not in METHODS:
        errors.append(f"run.method: unknown '{cfg.method}' (choose from {', '.join(METHODS)})")
    if cfg.scheme not in SCHEMES:
        errors.append(f"run.scheme: unknown '{cfg.scheme}' (choose from {', '.join(SCHEMES)})")
    if not isinstance(cfg.record_stride, int) or cfg.record_stride < 1:
        errors.append("run.record_stride: must be a positive integer")

    updates = {}
    if cfg.scenario == "files":
        for key in ("m0_path", "mf_path"):
            if not getattr(cfg, key):
                errors.append(f"scenario.{key}: required for the files scenario")
        if errors:
            raise ConfigError("; ".join(errors))
        grid = og.grid_from_nodes(og.read_table(cfg.mf_path, og.PROFILE_HEADER)[:, 0])
        defaults = dict(omega_lo=grid.omega_lo, omega_hi=grid.omega_hi, n_cells=grid.n_cells)
        spp, periods = 1000, 20
    else:
        sc = BUILTIN[cfg.scenario]()
        defaults = dict(omega_lo=sc.omega_lo, omega_hi=sc.omega_hi, n_cells=sc.n_cells)
        spp, periods = sc.steps_per_period, sc.periods
    for key, val in defaults.items():
        if getattr(cfg, key) is None:
            updates[key] = val
    cfg = replace(cfg, **updates)

    try:
        grid = cfg.grid
    except ValueError as exc:
        errors.append(f"grid: {exc}")
        grid = None
    if grid is not None and grid.n_nodes < 3:
        errors.append("grid.n_cells: need at least 2 cells (3 nodes)")

    period = cfg.period
    if grid is not None:
        natural = 2.0 * math.pi / grid.length
        if period is None:
            period = natural
        elif not math.isclose(period, natural, rel_tol=1e-12):
            notes.append(
                f"timing.period={period!r} overrides the natural 2*pi/(omega_hi-omega_lo)={natural!r}"
            )
    if period is None or not period > 0:
        errors.append("timing.period: must be positive")
        raise ConfigError("; ".join(errors))

    step = period / spp if cfg.step is None else cfg.step
    final_time = periods * period if cfg.final_time is None else cfg.final_time
    if not step > 0:
        errors.append("timing.step: must be positive")
    else:
        q = period / step
        if round(q) < 1 or abs(q - round(q)) > DIVISIBILITY_RTOL * q:
            errors.append(f"timing.step: step h={step!r} must divide the period T={period!r} exactly")
    if not final_time > 0:
        errors.append("timing.final_time: must be positive")
    else:
        q = final_time / period
        if round(q) < 1 or abs(q - round(q)) > DIVISIBILITY_RTOL * q:
            errors.append(
                f"timing.final_time: T_f={final_time!r} must be a positive multiple of T={period!r}"
            )
    if errors:
        raise ConfigError("; ".join(errors))
    for n in notes:
        warnings.warn(n, stacklevel=2)
    return replace(cfg, period=period, step=step, final_time=final_time, _warnings=tuple(notes))


def load_inputs(cfg: SimConfig):
    """Return ``(m0, m_f, rotation_mats_or_None)`` for a resolved config."""
    from . import rotation_field as rf

    grid = cfg.grid
    if cfg.scenario == "files":
        m0 = og.read_profile(cfg.m0_path)
        m_f = og.read_profile(cfg.mf_path)
        if m0.grid != grid or m_f.grid != grid:
            raise ConfigError("files: profile grids do not match the configured grid")
        rot = None
    else:
        sc = BUILTIN[cfg.scenario]()
        m0, m_f = sc.m0(grid), sc.m_f(grid)
        rot = sc.rotation(grid) if sc.rotation else None
    if cfg.rotation_path:
        field_ = rf.read_field(cfg.rotation_path)
        if field_.grid != grid:
            raise ConfigError("scenario.rotation_path: field grid does not match the configured grid")
        rot = field_.mats
    return m0, m_f, rot


_SECTIONS = {
    "scenario": ("name", "m0_path", "mf_path", "rotation_path"),
    "grid": ("omega_lo", "omega_hi", "n_cells"),
    "timing": ("period", "step", "steps_per_period", "final_time", "periods"),
    "run": ("method", "scheme", "record_stride", "lab_frame_check"),
    "output": ("dir",),
}


def _num(section, key, text, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {text!r} as {kind.__name__}") from None


def parse_config(text: str) -> SimConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    errors = []
    for sec in cp.sections():
        if sec not in _SECTIONS:
            errors.append(f"{sec}: unknown section")
            continue
        for key in cp[sec]:
            if key not in _SECTIONS[sec]:
                errors.append(f"{sec}.{key}: unknown key")
    if errors:
        raise ConfigError("; ".join(errors))

    def get(sec, key):
        return cp.get(sec, key, fallback=None) if cp.has_section(sec) else None

    kw = {}
    if get("scenario", "name") is not None:
        kw["scenario"] = get("scenario", "name")
    for key in ("m0_path", "mf_path", "rotation_path"):
        if get("scenario", key):
            kw[key] = get("scenario", key)
    for key in ("omega_lo", "omega_hi"):
        if get("grid", key) is not None:
            kw[key] = _num("grid", key, get("grid", key))
    if get("grid", "n_cells") is not None:
        kw["n_cells"] = _num("grid", "n_cells", get("grid", "n_cells"), int)
    if get("timing", "period") is not None:
        kw["period"] = _num("timing", "period", get("timing", "period"))
    if get("timing", "step") is not None and get("timing", "steps_per_period") is not None:
        raise ConfigError("timing: give either step or steps_per_period, not both")
    if get("timing", "final_time") is not None and get("timing", "periods") is not None:
        raise ConfigError("timing: give either final_time or periods, not both")
    if get("timing", "step") is not None:
        kw["step"] = _num("timing", "step", get("timing", "step"))
    if get("timing", "final_time") is not None:
        kw["final_time"] = _num("timing", "final_time", get("timing", "final_time"))
    spp = get("timing", "steps_per_period")
    periods = get("timing", "periods")
    if spp is not None or periods is not None:
        # relative to the period, resolved later
        kw["_rel"] = (
            None if spp is None else _num("timing", "steps_per_period", spp, int),
            None if periods is None else _num("timing", "periods", periods, int),
        )
    for key in ("method", "scheme"):
        if get("run", key) is not None:
            kw[key] = get("run", key)
    if get("run", "record_stride") is not None:
        kw["record_stride"] = _num("run", "record_stride", get("run", "record_stride"), int)
    if get("run", "lab_frame_check") is not None:
        try:
            kw["lab_frame_check"] = cp.getboolean("run", "lab_frame_check")
        except ValueError:
            raise ConfigError("run.lab_frame_check: expected true/false") from None
    if get("output", "dir"):
        kw["out_dir"] = get("output", "dir")

    rel = kw.pop("_rel", None)
    cfg = SimConfig(**kw)
    if rel is not None:
        cfg = _apply_relative_timing(cfg, *rel)
    return cfg


def _apply_relative_timing(cfg: SimConfig, spp, periods) -> SimConfig:
    period = cfg.period
    if period is None:
        lo = cfg.omega_lo
        hi = cfg.omega_hi
        if lo is None or hi is None:
            sc = BUILTIN.get(cfg.scenario)
            if sc is None:
                raise ConfigError(
                    "timing: steps_per_period/periods need grid.omega_lo/omega_hi or timing.period"
                )
            s = sc()
            lo = s.omega_lo if lo is None else lo
            hi = s.omega_hi if hi is None else hi
        if not hi > lo:
            raise ConfigError("grid: omega_lo must be < omega_hi")
        period = 2.0 * math.pi / (hi - lo)
    upd = {}
    if spp is not None:
        if spp < 1:
            raise ConfigError("timing.steps_per_period: must be a positive integer")
        upd["step"] = period / spp
    if periods is not None:
        if periods < 1:
            raise ConfigError("timing.periods: must be a positive integer")
        upd["final_time"] = periods * period
    return replace(cfg, **upd)


def serialize_config(cfg: SimConfig) -> str:
    cp = configparser.ConfigParser()
    cp["scenario"] = {"name": cfg.scenario}
    for key in ("m0_path", "mf_path", "rotation_path"):
        if getattr(cfg, key):
            cp["scenario"][key] = getattr(cfg, key)
    cp["grid"] = {}
    for key in ("omega_lo", "omega_hi", "n_cells"):
        if getattr(cfg, key) is not None:
            cp["grid"][key] = repr(getattr(cfg, key))
    cp["timing"] = {}
    for key in ("period", "step", "final_time"):
        if getattr(cfg, key) is not None:
            cp["timing"][key] = repr(getattr(cfg, key))
    cp["run"] = {
        "method": cfg.method,
        "scheme": cfg.scheme,
        "record_stride": str(cfg.record_stride),
        "lab_frame_check": "true" if cfg.lab_frame_check else "false",
    }
    if cfg.out_dir:
        cp["output"] = {"dir": cfg.out_dir}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text())
