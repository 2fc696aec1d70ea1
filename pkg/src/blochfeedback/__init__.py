"""Lyapunov feedback stabilization of an ensemble of Bloch spins.

The ensemble is indexed by the Larmor frequency ``omega`` on a regular grid.
A target profile ``M_f(omega)`` is flattened to ``-e3`` by a rotation field
``R(omega)``; an impulse train plus a gradient-type feedback then drives the
ensemble towards the target.

Modules
-------
geometry        cross products and the two closed-form rotation families
omega_grid      grid, finite differences, quadrature, norms, Lyapunov value
rotation_field  sweep and ODE constructions of ``R(omega)``
control_law     clock functions, moving frame ``F(t, omega)``, feedback
simulator       closed-loop integration and trajectory records
scenarios       builtin scenarios and config files
cli             command line entry point
"""

__version__ = "0.1.0"
