"""Regular grid in the Larmor frequency and sampled spin profiles.

Nodes are ``omega_i = omega_lo + (i - 1) * step`` for ``i = 1 .. n_cells + 1``
(stored 0-based).  Derivatives use central differences in the interior and
second-order one-sided differences at the two end nodes.  Integrals use the
cell rule in which every node owns the cell ``]omega_i - step/2,
omega_i + step/2[`` clipped to the domain, so the end nodes weigh ``step/2``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .geometry import E3, dot

ON_SPHERE_TOL = 1e-9


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class OmegaGrid:
    omega_lo: float
    omega_hi: float
    n_cells: int

    def __post_init__(self):
        if not self.omega_lo < self.omega_hi:
            raise ValueError(
                f"omega_lo ({self.omega_lo}) must be < omega_hi ({self.omega_hi})"
            )
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells}")

    @property
    def step(self) -> float:
        return (self.omega_hi - self.omega_lo) / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = self.omega_lo + np.arange(self.n_nodes) * self.step
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_nodes, self.step)
        w[0] = w[-1] = 0.5 * self.step
        w.setflags(write=False)
        return w

    @property
    def length(self) -> float:
        return self.omega_hi - self.omega_lo

    def refined(self, factor: int = 2) -> "OmegaGrid":
        return OmegaGrid(self.omega_lo, self.omega_hi, self.n_cells * factor)


@dataclass(frozen=True, eq=False)
class SpinProfile:
    """Unit 3-vectors sampled at the nodes of ``grid``; ``values`` is (n_nodes, 3)."""

    grid: OmegaGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes, 3):
            raise GridMismatchError(
                f"profile has shape {values.shape}, grid needs ({self.grid.n_nodes}, 3)"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: OmegaGrid, vec) -> "SpinProfile":
        return cls(grid, np.tile(np.asarray(vec, dtype=float), (grid.n_nodes, 1)))

    @classmethod
    def from_function(cls, grid: OmegaGrid, fn) -> "SpinProfile":
        """Build a profile from ``fn(omega_array) -> (n, 3) array``."""
        return cls(grid, fn(grid.nodes))

    def sphere_defect(self) -> float:
        return float(np.max(np.abs(np.sqrt(dot(self.values, self.values)) - 1.0)))

    def check_on_sphere(self, tol: float = ON_SPHERE_TOL) -> None:
        dev = np.abs(np.sqrt(dot(self.values, self.values)) - 1.0)
        bad = np.flatnonzero(dev > tol)
        if bad.size:
            i = int(bad[0])
            raise ValueError(
                f"profile is off the unit sphere at node {i + 1} "
                f"(omega={self.grid.nodes[i]:.17g}, | |v|-1 | = {dev[i]:.3e})"
            )


def finite_difference(values, step: float) -> np.ndarray:
    """Derivative along axis 0 of node samples (any trailing shape)."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 3:
        raise ValueError("finite differences need at least 3 nodes")
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * step)
    # one-sided closures must stay second order (decay identity within 2%)
    # written in differences so constants give exact zeros
    out[0] = (4.0 * (values[1] - values[0]) - (values[2] - values[0])) / (2.0 * step)
    out[-1] = (4.0 * (values[-1] - values[-2]) - (values[-1] - values[-3])) / (2.0 * step)
    return out


def derivative(p: SpinProfile) -> np.ndarray:
    """Omega-derivative of a profile, shape (n_nodes, 3)."""
    return finite_difference(p.values, p.grid.step)


def integrate(samples, grid: OmegaGrid) -> float:
    """Cell-rule quadrature of node samples over ``[omega_lo, omega_hi]``."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] != grid.n_nodes:
        raise GridMismatchError(
            f"{samples.shape[0]} samples for a grid of {grid.n_nodes} nodes"
        )
    return float(np.tensordot(grid.weights, samples, axes=(0, 0)))


def lyapunov(n_prof: SpinProfile) -> float:
    """Lyapunov value  int( |N'|^2 / 2 + 1 + <N, e3> ) d omega."""
    dn = derivative(n_prof)
    integrand = 0.5 * dot(dn, dn) + 1.0 + n_prof.values @ E3
    return integrate(integrand, n_prof.grid)


def norms(p: SpinProfile, target: SpinProfile) -> dict:
    """Discrete L2, H1 and Linf distances between two profiles on one grid."""
    if p.grid != target.grid:
        raise GridMismatchError(f"grids differ: {p.grid} vs {target.grid}")
    diff = p.values - target.values
    ddiff = derivative(p) - derivative(target)
    l2sq = integrate(dot(diff, diff), p.grid)
    h1sq = l2sq + integrate(dot(ddiff, ddiff), p.grid)
    return {
        "l2": float(np.sqrt(l2sq)),
        "h1": float(np.sqrt(h1sq)),
        "linf": float(np.max(np.sqrt(dot(diff, diff)))),
    }


PROFILE_HEADER = ["omega", "x", "y", "z"]


def write_profile(path, p: SpinProfile) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_HEADER)
        for om, v in zip(p.grid.nodes, p.values):
            w.writerow([repr(float(om))] + [repr(float(c)) for c in v])


def read_table(path, header: list[str]) -> np.ndarray:
    """Read a headed CSV of floats, checking the header names."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != header:
        raise ValueError(f"{path}: expected header {','.join(header)}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise ValueError(f"{path}: no data rows")
    try:
        data = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: rows must have {len(header)} columns")
    return data


def grid_from_nodes(omega: np.ndarray, rtol: float = 1e-9) -> OmegaGrid:
    """Recover the regular grid that produced ``omega``."""
    if omega.size < 3:
        raise ValueError("a profile needs at least 3 nodes")
    grid = OmegaGrid(float(omega[0]), float(omega[-1]), omega.size - 1)
    if np.max(np.abs(grid.nodes - omega)) > rtol * max(1.0, grid.length):
        raise ValueError("omega column is not a regular grid")
    return grid


def read_profile(path, tol: float = 1e-6) -> SpinProfile:
    """Load a profile CSV; vectors must be unit length within ``tol``."""
    data = read_table(path, PROFILE_HEADER)
    grid = grid_from_nodes(data[:, 0])
    prof = SpinProfile(grid, data[:, 1:])
    try:
        prof.check_on_sphere(tol)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    return prof
