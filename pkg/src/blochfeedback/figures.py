"""Matplotlib renderings of a run (Agg backend, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

COMPONENTS = ("x", "y", "z")


def plot_lyapunov_controls(records, path):
    """Lyapunov value (log scale) on top, feedback controls below."""
    t = np.array([r.t for r in records])
    lyap = np.array([r.lyapunov for r in records])
    fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True, figsize=(7, 5.5))
    positive = lyap > 0
    if positive.any():
        ax0.semilogy(t[positive], lyap[positive], color="k", lw=1.2)
    else:
        ax0.plot(t, lyap, color="k", lw=1.2)
    ax0.set_ylabel(r"$\mathcal{L}(t)$")
    ax0.grid(True, which="both", alpha=0.3)
    ax1.plot(t, [r.u1 for r in records], lw=1.0, label=r"$u_1$")
    ax1.plot(t, [r.u2 for r in records], lw=1.0, label=r"$u_2$")
    ax1.set_xlabel("$t$")
    ax1.set_ylabel("control")
    ax1.legend(loc="upper right")
    ax1.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_profiles(initial, final, target, path):
    omega = initial.grid.nodes
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 7))
    for k, ax in enumerate(axes):
        ax.plot(omega, initial.values[:, k], label="$t=0$", lw=1.2)
        ax.plot(omega, final.values[:, k], label="$t=T_f$", lw=1.2)
        ax.plot(omega, target.values[:, k], "k--", label="target", lw=1.0)
        ax.set_ylabel(COMPONENTS[k])
        ax.grid(True, alpha=0.3)
    axes[0].legend(loc="best", fontsize=8)
    axes[-1].set_xlabel(r"$\omega$")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
