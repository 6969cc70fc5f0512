"""
Figures for experiment reports.

Every function writes one file and closes its figure; nothing is shown
interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .solver import FieldStack  # noqa: E402
from .verify import BarrierReport, MovingPlaneReport  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}
# keeps PNG bytes stable across runs
_META = {"Software": None}


def plot_field(stack: FieldStack, path, component: int = 1):
    """Filled image of ``u_component`` over the node box; exterior nodes blank."""
    g = stack.grid
    arr = g.to_array(stack.u(component))
    arr = np.where(np.isfinite(arr), arr, np.nan)
    extent = [(-g.I - 0.5) * g.h, (g.I + 0.5) * g.h, (-g.J - 0.5) * g.h, (g.J + 0.5) * g.h]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 4.5 * (g.J + 0.5) / (g.I + 0.5) + 0.4))
        im = ax.imshow(arr.T, origin="lower", extent=extent, cmap="viridis", interpolation="nearest")
        ax.axvline(0.0, color="w", lw=0.6, ls="--")
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
        ax.set_title(f"$u_{component}$ on {g.spec.shape}, n_cells={g.n_cells}")
        ax.grid(False)
        fig.colorbar(im, ax=ax, shrink=0.8)
        fig.savefig(path, metadata=_META)
        plt.close(fig)


def plot_sweep(report: MovingPlaneReport, path, title: str = "moving-plane sweep"):
    """Component minima of the reflection differences against ``lambda``."""
    entries = sorted(report.entries, key=lambda e: e.lam)
    lam = np.array([e.lam for e in entries])
    mins = np.array([e.minima for e in entries], dtype=float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.5, 3.4))
        for c in range(mins.shape[1]):
            y = np.where(np.isfinite(mins[:, c]), mins[:, c], np.nan)
            ax.plot(lam, y, marker=".", ms=3, lw=1, label=f"min $v_{c + 1}$")
        ax.axhline(0.0, color="k", lw=0.6)
        ax.axhline(-report.tol, color="r", lw=0.6, ls=":", label="-tol")
        if report.mu_hat is not None:
            ax.axvline(report.mu_hat, color="g", lw=0.8, ls="--", label=r"$\hat\mu$")
        if report.first_violation is not None:
            ax.axvline(report.first_violation, color="r", lw=0.8, ls="--", label="first violation")
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel("cap minimum")
        ax.set_title(title)
        ax.legend(frameon=False, fontsize=7)
        fig.savefig(path, metadata=_META)
        plt.close(fig)


def plot_barrier(report: BarrierReport, path):
    """Sign of ``Laplace h + K h`` against the radius on a log axis."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.5, 3.4))
        v = report.values
        ax.plot(report.radii, np.sign(v) * np.log10(1.0 + np.abs(v)), lw=1)
        ax.axhline(0.0, color="k", lw=0.6)
        if report.r_star > 0:
            ax.axvline(report.r_star, color="g", lw=0.8, ls="--", label=f"r* = {report.r_star:.3g}")
            ax.legend(frameon=False, fontsize=7)
        ax.set_xscale("log")
        ax.set_xlabel(r"$|x|$")
        ax.set_ylabel(r"sign$\cdot\log_{10}(1+|\Delta h + K h|)$")
        ax.set_title(f"barrier a={report.a:g}, K={report.K:g}")
        fig.savefig(path, metadata=_META)
        plt.close(fig)
