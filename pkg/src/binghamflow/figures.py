"""Report figures rendered next to the delimited output files."""

from __future__ import annotations

import os
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .integrator import SimState, StepReport

__all__ = ["render_run_figures", "render_convergence_figure"]


def render_run_figures(reports: Sequence[StepReport], state: SimState,
                       outdir: str) -> List[str]:
    """Time-series panel and final-field panel; returns the written paths."""
    paths = []

    if reports:
        t = [r.t for r in reports]
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
        axes[0].plot(t, [r.kinetic for r in reports], label="kinetic")
        axes[0].plot(t, [r.total for r in reports], label="total")
        axes[0].set_xlabel("t")
        axes[0].set_ylabel("energy")
        axes[0].legend(fontsize=8)
        axes[1].plot(t, [r.rho_min for r in reports], label="rho min")
        axes[1].plot(t, [r.rho_max for r in reports], label="rho max")
        axes[1].set_xlabel("t")
        axes[1].set_ylabel("density bounds")
        axes[1].legend(fontsize=8)
        axes[2].plot(t, [r.fixed_point.iterations for r in reports])
        axes[2].set_xlabel("t")
        axes[2].set_ylabel("fixed-point iterations")
        fig.tight_layout()
        p = os.path.join(outdir, "timeseries.png")
        fig.savefig(p, dpi=130)
        plt.close(fig)
        paths.append(p)

    g = state.grid
    extent = (0.0, g.lx, 0.0, g.ly)
    uc, vc = state.u.cell_centered()
    speed = np.sqrt(uc ** 2 + vc ** 2)
    panels = [
        ("rho", state.rho.values),
        ("|sigma|", state.sigma.magnitude()),
        ("plug", (state.sigma.magnitude() < 1.0 - 1e-3).astype(float)),
        ("speed", speed),
    ]
    fig, axes = plt.subplots(1, 4, figsize=(14, 3.2))
    for ax, (title, vals) in zip(axes, panels):
        im = ax.imshow(vals.T, origin="lower", extent=extent, aspect="equal")
        ax.set_title(title, fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    p = os.path.join(outdir, "fields.png")
    fig.savefig(p, dpi=130)
    plt.close(fig)
    paths.append(p)
    return paths


def render_convergence_figure(dts: Sequence[float], errors_u: Sequence[float],
                              errors_rho: Sequence[float], path: str,
                              slope_u: float = float("nan"),
                              slope_rho: float = float("nan")) -> str:
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    ax.loglog(dts, errors_u, "o-", label=f"velocity (slope {slope_u:.2f})")
    ax.loglog(dts, errors_rho, "s-", label=f"density (slope {slope_rho:.2f})")
    ref = np.asarray(dts, dtype=float)
    ax.loglog(ref, errors_u[0] * ref / ref[0], "k--", lw=0.8, label="first order")
    ax.set_xlabel("dt")
    ax.set_ylabel("terminal L2 error")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
