"""Static figures for simulation traces (Agg backend, PNG output)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .pdesim import SimTrace  # noqa: E402


def plot_trace(trace: SimTrace, path: str | Path, title: str = "") -> Path:
    """Heatmap of y(t, x) above the control signal u(t)."""
    path = Path(path)
    fig, (ax_y, ax_u) = plt.subplots(2, 1, figsize=(6, 6), height_ratios=[3, 1], sharex=True)
    lim = float(np.abs(trace.Y).max()) or 1.0
    mesh = ax_y.pcolormesh(trace.snap_t, trace.x, trace.Y.T, shading="auto",
                           cmap="RdBu_r", vmin=-lim, vmax=lim)
    fig.colorbar(mesh, ax=[ax_y, ax_u], label="y")
    ax_y.set_ylabel("x")
    if trace.blowup:
        ax_y.axvline(trace.blowup_time, color="k", ls="--", lw=1)
    ax_y.set_title(title or ("blow-up at t = %.4f" % trace.blowup_time if trace.blowup else "closed loop"))
    ax_u.plot(trace.t, trace.U, lw=1)
    ax_u.set_xlabel("t")
    ax_u.set_ylabel("u")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_comparison(traces: dict, path: str | Path) -> Path:
    """Sup-norm histories of several named traces on a log scale."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, tr in traces.items():
        ax.semilogy(tr.t, np.maximum(tr.sup, 1e-16), label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("sup |y(t, .)|")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
