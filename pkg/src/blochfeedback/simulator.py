"""Closed-loop integration of the spin ensemble.

The integration variable is ``M1 = P(t) M``, which is continuous across the
pi pulses.  One step from ``t_n`` to ``t_n + h``:

1. ``N = R exp(sigma(t_n) w S) M1`` and controls ``u = feedback(N)``;
2. explicit Euler on ``dM1/dt = (u1 e1 + u2 e2 + eps w e3) ^ M1`` and
   renormalization of every node.

With ``scheme="split"`` (default) the drift ``eps w e3`` is applied as the
exact rotation and only the control part goes through Euler.  In that case
the ``N`` coordinates follow the plain Euler-plus-renormalize scheme for the
driftless ``N`` dynamics, so ``N = -e3`` is an exact fixed point.
``scheme="euler"`` treats the whole right-hand side with one Euler step.
"""

from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import control_law as cl
from . import omega_grid as og
from . import rotation_field as rf
from .geometry import E1, E3, exp_sigma_omega_S, renormalize, wedge
from .scenarios import SimConfig, load_inputs, resolve

log = logging.getLogger(__name__)

PULSE = np.diag([1.0, -1.0, -1.0])


@dataclass(frozen=True, eq=False)
class SimState:
    t: float
    n: int
    m1: og.SpinProfile


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    lyapunov: float
    u1: float
    u2: float
    linf_to_target: float | None
    l2_to_minus_e3: float


@dataclass(frozen=True, eq=False)
class Setup:
    """Everything fixed during a run."""

    config: SimConfig
    clock: cl.ControlClock
    rotation: rf.RotationField
    m0: og.SpinProfile
    m_f: og.SpinProfile

    @property
    def grid(self):
        return self.m_f.grid


@dataclass(eq=False)
class SimResult:
    setup: Setup
    records: list
    initial: og.SpinProfile
    final: og.SpinProfile
    linf_at_2kT: list
    profiles_2kT: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    lab_check: dict | None = None


def prepare(cfg: SimConfig) -> Setup:
    cfg = resolve(cfg)
    m0, m_f, rot = load_inputs(cfg)
    if rot is not None:
        r = rf.RotationField(cfg.grid, rot)
    elif cfg.method == "ode":
        r = rf.build_ode(m_f)
    else:
        r = rf.build_sweep(m_f)
    return Setup(cfg, cl.ControlClock(cfg.period), r.with_derivative(), m0, m_f)


def initial_state(setup: Setup) -> SimState:
    m1 = setup.m0.values @ setup.clock.P(0.0).T
    return SimState(0.0, 0, og.SpinProfile(setup.grid, m1))


def _sigma(state: SimState, cfg: SimConfig) -> float:
    return cl.sigma_at_step(state.n, cfg.steps_per_period, cfg.h)


def to_n_frame(state: SimState, clock: cl.ControlClock, r: rf.RotationField, sigma: float | None = None) -> og.SpinProfile:
    """``N = R exp(sigma w S) M1`` node-wise."""
    if sigma is None:
        sigma = clock.sigma(state.t)
    q = r.mats @ exp_sigma_omega_S(sigma * r.grid.nodes)
    return og.SpinProfile(r.grid, np.einsum("nij,nj->ni", q, state.m1.values))


def reconstruct_lab(state: SimState, clock: cl.ControlClock) -> og.SpinProfile:
    """Lab-frame profile ``M = P(t) M1``; on ``[2kT, (2k+1)T)`` this is ``M1`` itself."""
    if clock.epsilon(state.t) == 1:
        return state.m1
    return og.SpinProfile(state.m1.grid, state.m1.values * np.array([1.0, -1.0, -1.0]))


def controls(state: SimState, cfg: SimConfig, clock: cl.ControlClock, r: rf.RotationField):
    """``((u1, u2), N)`` at the current state."""
    sigma = _sigma(state, cfg)
    n_prof = to_n_frame(state, clock, r, sigma)
    frame = cl.frame_at(clock, state.t, r, sigma)
    return cl.feedback(state.t, n_prof, frame), n_prof


def _drift(eps, omega, h):
    # exact flow of d/dt m = eps * omega * e3 ^ m over one step
    return exp_sigma_omega_S(-eps * omega * h)


def _advance(m, u1, u2, eps, omega, h, scheme, drift=None):
    """One step on an (n, 3) array in the M1 frame (or lab frame, with the
    caller supplying lab controls and ``eps=+1``)."""
    if scheme == "euler":
        field_ = np.zeros_like(m)
        field_[:, 0] = u1
        field_[:, 1] = u2
        field_[:, 2] = eps * omega
        return renormalize(m + h * wedge(field_, m))
    ctrl = np.array([u1, u2, 0.0])
    m = renormalize(m + h * wedge(ctrl, m))
    if drift is None:
        drift = _drift(eps, omega, h)
    return np.einsum("nij,nj->ni", drift, m)


def step(state: SimState, config: SimConfig, clock: cl.ControlClock, r: rf.RotationField) -> SimState:
    """Advance one time step of size ``config.h``."""
    (u1, u2), _ = controls(state, config, clock, r)
    eps = cl.epsilon_at_step(state.n, config.steps_per_period)
    m = _advance(state.m1.values, u1, u2, eps, r.grid.nodes, config.h, config.scheme)
    n = state.n + 1
    return SimState(n * config.h, n, og.SpinProfile(r.grid, m))


def _linf(a: og.SpinProfile, b: og.SpinProfile) -> float:
    d = a.values - b.values
    return float(np.max(np.sqrt(np.sum(d * d, axis=-1))))


def run(config: SimConfig | Setup, progress=None) -> SimResult:
    """Integrate from 0 to ``final_time`` and collect trajectory records.

    A record is taken every ``record_stride`` steps, at every ``t = 2kT`` and
    at the final time.  ``linf_to_target`` is filled only at ``t = 2kT``.
    """
    setup = config if isinstance(config, Setup) else prepare(config)
    cfg, clock, r, m_f = setup.config, setup.clock, setup.rotation, setup.m_f
    spp, h, n_steps = cfg.steps_per_period, cfg.h, cfg.n_steps
    omega = setup.grid.nodes
    drifts = {+1: _drift(+1, omega, h), -1: _drift(-1, omega, h)}
    minus_e3 = og.SpinProfile.constant(setup.grid, -E3)

    t0 = _time.perf_counter()
    state = initial_state(setup)
    initial = reconstruct_lab(state, clock)
    records, linf_2k, m1_2k = [], [], []
    u_min = np.array([np.inf, np.inf])
    u_max = -u_min
    m = state.m1.values
    for n in range(n_steps + 1):
        state = SimState(n * h, n, og.SpinProfile(setup.grid, m))
        (u1, u2), n_prof = controls(state, cfg, clock, r)
        at_2kT = n % (2 * spp) == 0
        if n % cfg.record_stride == 0 or at_2kT or n == n_steps:
            linf = None
            if at_2kT:
                linf = _linf(reconstruct_lab(state, clock), m_f)
                linf_2k.append((n // (2 * spp), state.t, linf))
                m1_2k.append(state.m1)
            records.append(
                TrajectoryRecord(
                    state.t,
                    og.lyapunov(n_prof),
                    u1,
                    u2,
                    linf,
                    og.norms(n_prof, minus_e3)["l2"],
                )
            )
        if n == n_steps:
            break
        u_min = np.minimum(u_min, (u1, u2))
        u_max = np.maximum(u_max, (u1, u2))
        eps = cl.epsilon_at_step(n, spp)
        m = _advance(m, u1, u2, eps, omega, h, cfg.scheme, drifts[eps])
        if progress is not None:
            progress(n + 1, n_steps)
    wall = _time.perf_counter() - t0
    final = reconstruct_lab(state, clock)

    result = SimResult(setup, records, initial, final, linf_2k, m1_2k)
    result.summary = {
        "scenario": cfg.scenario,
        "method": cfg.method if cfg.rotation_path is None and cfg.scenario != "equator" else "override",
        "scheme": cfg.scheme,
        "n_cells": cfg.n_cells,
        "period": cfg.period,
        "step": h,
        "final_time": cfg.final_time,
        "steps": n_steps,
        "lyapunov_initial": records[0].lyapunov,
        "lyapunov_final": records[-1].lyapunov,
        "lyapunov_ratio": records[-1].lyapunov / records[0].lyapunov if records[0].lyapunov > 0 else float("nan"),
        "u1_min": float(u_min[0]),
        "u1_max": float(u_max[0]),
        "u2_min": float(u_min[1]),
        "u2_max": float(u_max[1]),
        "linf_initial": linf_2k[0][2],
        "linf_final": _linf(final, m_f),
        "wall_time_s": wall,
    }
    if cfg.lab_frame_check:
        result.lab_check = lab_frame_check(setup, result)
        result.summary["lab_check_max_linf"] = result.lab_check["max_linf"]
    log.info("run finished: %d steps in %.2fs", n_steps, wall)
    return result


def run_lab_frame(setup: Setup) -> list:
    """Integrate the lab-frame profile with explicit pi pulses about e1.

    Controls are the lab versions of the feedback (sign-flipped second
    control on odd periods); a pulse is applied after each step that lands
    on ``t = kT``.  Returns ``[(k, t, M(2kT^+))]``.
    """
    cfg, clock, r = setup.config, setup.clock, setup.rotation
    spp, h = cfg.steps_per_period, cfg.h
    omega = setup.grid.nodes
    drift = _drift(+1, omega, h)
    m = setup.m0.values.copy()
    out = [(0, 0.0, og.SpinProfile(setup.grid, m))]
    for n in range(cfg.n_steps):
        t = n * h
        eps = cl.epsilon_at_step(n, spp)
        m1 = m if eps == 1 else m * np.array([1.0, -1.0, -1.0])
        state = SimState(t, n, og.SpinProfile(setup.grid, m1))
        (u1, u2), _ = controls(state, cfg, clock, r)
        lu1, lu2 = u1, eps * u2
        m = _advance(m, lu1, lu2, +1, omega, h, cfg.scheme, drift)
        if (n + 1) % spp == 0:
            m = m @ PULSE.T
        if (n + 1) % (2 * spp) == 0:
            out.append(((n + 1) // (2 * spp), (n + 1) * h, og.SpinProfile(setup.grid, m)))
    return out


def lab_frame_check(setup: Setup, result: SimResult) -> dict:
    """Compare the lab-frame pulse integration with the M1-frame run at 2kT."""
    lab = run_lab_frame(setup)
    diffs = [_linf(a, b) for a, (_, _, b) in zip(result.profiles_2kT, lab)]
    return {"times": [t for _, t, _ in lab], "linf": diffs, "max_linf": max(diffs)}


def refinement_study(cfg: SimConfig, grid: bool = True, step_: bool = True) -> dict:
    """Rerun with ``2N`` cells and with ``h/2`` and compare against the base run.

    Profiles are compared at the base-grid nodes.  Returns the final-state
    L-infinity deltas and the Lyapunov deltas at the final time.
    """
    from dataclasses import replace

    base_cfg = resolve(cfg)
    base = run(replace(base_cfg, lab_frame_check=False))
    out = {"base_lyapunov_final": base.summary["lyapunov_final"]}
    if grid:
        fine = run(replace(base_cfg, n_cells=2 * base_cfg.n_cells, lab_frame_check=False))
        out["grid_linf_delta"] = _linf(
            base.final, og.SpinProfile(base.final.grid, fine.final.values[::2])
        )
        out["grid_lyapunov_delta"] = abs(fine.summary["lyapunov_final"] - base.summary["lyapunov_final"])
    if step_:
        half = run(replace(base_cfg, step=base_cfg.h / 2, lab_frame_check=False))
        out["step_linf_delta"] = _linf(base.final, half.final)
        out["step_lyapunov_delta"] = abs(half.summary["lyapunov_final"] - base.summary["lyapunov_final"])
    return out
