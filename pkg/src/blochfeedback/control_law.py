"""Impulse-train clock, moving frame and Lyapunov feedback.

The clock alternates sign every period ``T``: ``eps(t) = (-1)**floor(t/T)``.
Its primitive ``sigma`` is a triangle wave vanishing at every ``2kT``.
The moving frame is ``F(t, w) = R(w) exp(sigma(t) w S)`` and the feedback is
``u_i = -H_i`` with

    H_i = int <N', (dF/dw e_i) ^ N> + <e3, (F e_i) ^ N> dw,

which makes the Lyapunov value decrease at rate ``u_1**2 + u_2**2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import omega_grid as og
from .geometry import S, exp_sigma_omega_S, wedge
from .rotation_field import RotationField

_SNAP = 1e-12


@dataclass(frozen=True)
class ControlClock:
    period: float

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    def period_index(self, t: float) -> tuple[int, bool]:
        """``(floor(t / T), on_boundary)``; times within 1e-12 relative of a
        multiple of ``T`` snap onto it."""
        q = t / self.period
        k = round(q)
        if abs(q - k) <= _SNAP * max(1.0, abs(q)):
            return int(k), True
        return int(np.floor(q)), False

    def epsilon(self, t: float) -> int:
        if t < 0:
            raise ValueError("clock is defined for t >= 0")
        k, _ = self.period_index(t)
        return -1 if k % 2 else 1

    def sigma(self, t: float) -> float:
        """Closed-form ``int_0^t eps(s) ds``."""
        if t < 0:
            raise ValueError("clock is defined for t >= 0")
        k, snapped = self.period_index(t)
        frac = 0.0 if snapped else t - k * self.period
        return frac if k % 2 == 0 else self.period - frac

    def P(self, t: float) -> np.ndarray:
        e = float(self.epsilon(t))
        return np.diag([1.0, e, e])


def sigma_at_step(n: int, steps_per_period: int, h: float) -> float:
    """``sigma(n h)`` from the integer step index, exact at every ``2kT``."""
    tau = n % (2 * steps_per_period)
    if tau <= steps_per_period:
        return tau * h
    return (2 * steps_per_period - tau) * h


def epsilon_at_step(n: int, steps_per_period: int) -> int:
    return -1 if (n // steps_per_period) % 2 else 1


@dataclass(frozen=True, eq=False)
class FrameField:
    grid: og.OmegaGrid
    f_mats: np.ndarray = field(repr=False)
    df_mats: np.ndarray = field(repr=False)
    at_time: float


def frame_at(clock: ControlClock, t: float, r: RotationField, sigma: float | None = None) -> FrameField:
    """Moving frame and its omega-derivative at time ``t``.

    ``sigma`` may be supplied by callers that track it exactly (the
    simulator does, from the step index).
    """
    if r.dmats is None:
        raise ValueError("rotation field carries no derivative; call with_derivative()")
    if sigma is None:
        sigma = clock.sigma(t)
    ex = exp_sigma_omega_S(sigma * r.grid.nodes)
    f = r.mats @ ex
    df = r.dmats @ ex + sigma * (r.mats @ (S @ ex))
    return FrameField(r.grid, f, df, t)


def feedback(t: float, n_prof: og.SpinProfile, frame: FrameField) -> tuple[float, float]:
    """Feedback controls ``(u1, u2) = (-H_1, -H_2)`` for the state ``N``."""
    if n_prof.grid != frame.grid:
        raise og.GridMismatchError(f"grids differ: {n_prof.grid} vs {frame.grid}")
    if frame.at_time != t:
        raise ValueError(f"frame evaluated at t={frame.at_time}, feedback asked at t={t}")
    n = n_prof.values
    dn = og.derivative(n_prof)
    u = []
    for i in (0, 1):
        first = np.sum(dn * wedge(frame.df_mats[:, :, i], n), axis=-1)
        second = wedge(frame.f_mats[:, :, i], n)[:, 2]
        u.append(-og.integrate(first + second, n_prof.grid))
    return u[0], u[1]


def lab_controls(clock: ControlClock, t: float, u1: float, u2: float) -> tuple[float, float, bool]:
    """Smooth lab-frame controls and whether a pi pulse about e1 fires at ``t``.

    The second control carries the clock sign so that the pulse train and the
    sign flip together reproduce the ``M1`` dynamics.
    """
    k, on_boundary = clock.period_index(t)
    impulse = on_boundary and k > 0
    return u1, clock.epsilon(t) * u2, impulse
