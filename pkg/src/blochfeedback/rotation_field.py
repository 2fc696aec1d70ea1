"""Rotation fields ``R(omega)`` with ``R(omega) M_f(omega) = -e3``.

Two independent constructions are provided.  ``build_sweep`` walks the grid
and builds an orthonormal frame per node whose third vector is ``-M_f``,
seeding each frame from the previous one (a discrete parallel transport).
``build_ode`` integrates ``dR/domega = R A(omega)`` where ``A`` is the
cross-product operator of ``f = M_f' ^ M_f``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import omega_grid as og
from .geometry import BASIS, E3, dot, nearest_rotation, rotation_defects, wedge

SWEEP_PARALLEL_TOL = 1e-8
LOAD_ROTATION_TOL = 1e-10


class SweepError(ArithmeticError):
    """The seed axis was (nearly) parallel to the frame axis at some node."""


@dataclass(frozen=True, eq=False)
class RotationField:
    grid: og.OmegaGrid
    mats: np.ndarray = field(repr=False)
    dmats: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        mats = np.array(self.mats, dtype=float)
        if mats.shape != (self.grid.n_nodes, 3, 3):
            raise og.GridMismatchError(
                f"rotation field has shape {mats.shape}, grid needs "
                f"({self.grid.n_nodes}, 3, 3)"
            )
        mats.setflags(write=False)
        object.__setattr__(self, "mats", mats)
        if self.dmats is not None:
            dmats = np.array(self.dmats, dtype=float)
            if dmats.shape != mats.shape:
                raise og.GridMismatchError("dmats shape does not match mats")
            dmats.setflags(write=False)
            object.__setattr__(self, "dmats", dmats)

    @classmethod
    def constant(cls, grid: og.OmegaGrid, mat) -> "RotationField":
        return cls(grid, np.tile(np.asarray(mat, dtype=float), (grid.n_nodes, 1, 1)))

    def with_derivative(self) -> "RotationField":
        if self.dmats is not None:
            return self
        return RotationField(self.grid, self.mats, derivative_field(self))

    def apply(self, p: og.SpinProfile) -> og.SpinProfile:
        """Node-wise ``R(omega_i) p(omega_i)``."""
        if p.grid != self.grid:
            raise og.GridMismatchError(f"grids differ: {p.grid} vs {self.grid}")
        return og.SpinProfile(self.grid, np.einsum("nij,nj->ni", self.mats, p.values))


def _frame(r3, theta):
    """Right-handed frame (r1, r2, r3) with r2 along ``theta ^ r3``."""
    r2 = wedge(theta, r3)
    n = np.sqrt(dot(r2, r2))
    if n < SWEEP_PARALLEL_TOL:
        return None
    r2 = r2 / n
    r1 = wedge(r2, r3)
    return r1, r2


def seed_axis(m_f0) -> np.ndarray:
    """Canonical basis vector least aligned with ``m_f0``."""
    return BASIS[int(np.argmin(np.abs(m_f0)))].copy()


def build_sweep(m_f: og.SpinProfile, seed=None) -> RotationField:
    """Sweep construction of ``R``; exact flattening at every node.

    At node 1 the frame is seeded with ``seed`` (default: the canonical basis
    vector least aligned with ``M_f(omega_1)``); afterwards the seed is minus
    the previous ``r1``.  ``R`` is the transpose of the column matrix
    ``[r1 r2 r3]`` with ``r3 = -M_f``.
    """
    m_f.check_on_sphere()
    values = m_f.values
    mats = np.empty((m_f.grid.n_nodes, 3, 3))
    theta = seed_axis(values[0]) if seed is None else np.asarray(seed, dtype=float)
    for i, m in enumerate(values):
        r3 = -m
        fr = _frame(r3, theta)
        if fr is None:
            raise SweepError(
                f"seed axis {theta.tolist()} is parallel to -M_f at node {i + 1}; "
                "retry with another seed"
            )
        r1, r2 = fr
        # rows of R are the frame vectors
        mats[i, 0], mats[i, 1], mats[i, 2] = r1, r2, r3
        theta = -r1
    return RotationField(m_f.grid, mats)


def _hat(v):
    """Matrix of ``x -> v ^ x``."""
    out = np.zeros(np.shape(v)[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def build_ode(m_f: og.SpinProfile, seed=None) -> RotationField:
    """Integrate ``R' = R A`` with classical RK4, one step per grid cell.

    On each cell ``A`` is the cross-product operator of ``f = M_f' ^ M_f``
    evaluated at the cell midpoint, with ``M_f'`` the centred difference
    ``(M_{i+1} - M_i) / step`` and ``M_f`` the mean of the two end values.
    Each step is projected back onto SO(3).  ``R(omega_lo)`` is the first
    sweep frame, so both constructions share their initial value.
    """
    m_f.check_on_sphere()
    grid = m_f.grid
    v = m_f.values
    h = grid.step
    f = wedge((v[1:] - v[:-1]) / h, 0.5 * (v[1:] + v[:-1]))
    gen = _hat(f)
    first = og.SpinProfile(og.OmegaGrid(0.0, 1.0, 2), np.repeat(v[:1], 3, axis=0))
    mats = np.empty((grid.n_nodes, 3, 3))
    mats[0] = build_sweep(first, seed).mats[0]
    r = mats[0]
    for i, a in enumerate(gen):
        if not a.any():
            mats[i + 1] = r
            continue
        k1 = r @ a
        k2 = (r + 0.5 * h * k1) @ a
        k3 = (r + 0.5 * h * k2) @ a
        k4 = (r + h * k3) @ a
        r = nearest_rotation(r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        mats[i + 1] = r
    return RotationField(grid, mats)


def derivative_field(r: RotationField) -> np.ndarray:
    """Entrywise finite-difference ``R'``, same stencil as profile derivatives."""
    return og.finite_difference(r.mats, r.grid.step)


def matrix_h1_norm(mats, grid: og.OmegaGrid) -> float:
    d = og.finite_difference(mats, grid.step)
    sq = np.sum(mats**2, axis=(-2, -1)) + np.sum(d**2, axis=(-2, -1))
    return float(np.sqrt(og.integrate(sq, grid)))


def validate(r: RotationField, m_f: og.SpinProfile) -> dict:
    """Residuals of a rotation field against its target profile.

    Norms use the Frobenius norm for matrices; ``h1_ratio`` is the measured
    constant in ``|R|_H1 <= C |M_f|_H1``.
    """
    if r.grid != m_f.grid:
        raise og.GridMismatchError(f"grids differ: {r.grid} vs {m_f.grid}")
    flat = np.einsum("nij,nj->ni", r.mats, m_f.values) + E3
    orth, det = rotation_defects(r.mats)
    md = og.derivative(m_f)
    mf_h1 = float(
        np.sqrt(og.integrate(dot(m_f.values, m_f.values) + dot(md, md), m_f.grid))
    )
    r_h1 = matrix_h1_norm(r.mats, r.grid)
    return {
        "flattening_residual": float(np.max(np.sqrt(dot(flat, flat)))),
        "orthogonality_defect": orth,
        "det_defect": det,
        "r_h1": r_h1,
        "mf_h1": mf_h1,
        "h1_ratio": r_h1 / mf_h1,
    }


FIELD_HEADER = ["omega"] + [f"r{i}{j}" for i in range(1, 4) for j in range(1, 4)]


def write_field(path, r: RotationField) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIELD_HEADER)
        for om, m in zip(r.grid.nodes, r.mats):
            w.writerow([repr(float(om))] + [repr(float(c)) for c in m.reshape(9)])


def read_field(path, tol: float = LOAD_ROTATION_TOL) -> RotationField:
    """Load a rotation-field CSV; every matrix must be a rotation within ``tol``."""
    data = og.read_table(path, FIELD_HEADER)
    grid = og.grid_from_nodes(data[:, 0])
    mats = data[:, 1:].reshape(-1, 3, 3)
    for i, m in enumerate(mats):
        orth, det = rotation_defects(m)
        if orth > tol or det > tol:
            raise ValueError(
                f"{path}: matrix at node {i + 1} is not a rotation "
                f"(orthogonality {orth:.2e}, det {det:.2e})"
            )
    return RotationField(grid, mats)
