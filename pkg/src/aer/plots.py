"""Static SVG figures."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import atomic_write_text  # noqa: E402


def _save(fig, path) -> Path:
    import io

    buf = io.StringIO()
    fig.savefig(buf, format="svg")
    plt.close(fig)
    return atomic_write_text(path, buf.getvalue())


def plot_fields(path, x, times, u0, fvm) -> Path:
    """Side-by-side heatmaps of the asymptotic and the reference solution."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    vmin = min(np.min(u0), np.min(fvm))
    vmax = max(np.max(u0), np.max(fvm))
    for ax, data, title in zip(axes, (u0, fvm), ("asymptotic U0", "finite volume")):
        im = ax.pcolormesh(x, times, data, shading="auto", vmin=vmin, vmax=vmax, cmap="viridis")
        ax.set_title(title)
        ax.set_xlabel("x")
    axes[0].set_ylabel("t")
    fig.colorbar(im, ax=axes, shrink=0.8)
    return _save(fig, path)


def plot_front(path, times, x0, fvm_front, width) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.fill_betweenx(times, x0 - width / 2, x0 + width / 2, color="0.85", label="layer window")
    ax.plot(x0, times, "k-", label="x0(t)")
    ax.plot(fvm_front, times, "r--", label="max |u_x| (reference)")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.legend()
    return _save(fig, path)


def plot_reconstruction(path, estimate, f_true, report) -> Path:
    x = np.linspace(0.0, 1.0, 1001)
    xe = np.linspace(report.xs[0], report.xs[-1], 2001)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.fill_between(xe, report.envelope.f_low(xe), report.envelope.f_up(xe), color="0.85", label="envelope")
    ax.plot(x, f_true(x), "k--", label="f*")
    ax.plot(estimate.xs, estimate.values, "b.-", ms=3, label="reconstruction")
    ax.set_xlabel("x")
    ax.set_title(f"Delta1 = {report.delta1:.4g}")
    ax.legend()
    return _save(fig, path)
