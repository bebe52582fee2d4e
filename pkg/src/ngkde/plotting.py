"""Static 2-D figures for density surfaces and simulation reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["plot_surface", "plot_simulation"]


def plot_surface(surface, path, sample=None, levels: int = 12) -> None:
    """Filled contour plot of a :class:`DensitySurface`, optionally with the data."""
    m1, m2 = surface.grid.mesh()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    cs = ax.contourf(m1, m2, surface.values, levels=levels, cmap="viridis")
    fig.colorbar(cs, ax=ax, label="density")
    if sample is not None:
        ax.plot(sample[:, 0], sample[:, 1], ".", ms=2, color="white", alpha=0.6)
    b1, b2 = surface.bw.pair(surface.kind)
    names = surface.kind.bandwidth_names
    ax.set_title(f"{surface.kind.value}: {names[0]}={b1:.4g}, {names[1]}={b2:.4g}")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_simulation(report, path) -> None:
    """Bar chart of mean ISE (x1e6) per estimator with one-sd error bars."""
    kinds = report.config.kinds
    means = [report.summaries[k].mean_ise * 1e6 for k in kinds]
    sds = [report.summaries[k].sd_ise * 1e6 for k in kinds]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar([k.value for k in kinds], means, yerr=sds, capsize=4, color="0.6", edgecolor="k")
    ax.set_ylabel("ISE x 1e6")
    cfg = report.config
    ax.set_title(f"target {cfg.target_id}, n={cfg.n}, {cfg.replications} replications")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
