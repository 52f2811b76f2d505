"""SVG chart emission (derived artifacts only, never inputs)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_clustering_index(radii, h_star, path, title=None):
    """Line chart of the clustering index with +/-1 significance lines."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(radii, h_star, marker="o", lw=1.5, label="clustering index")
    ax.axhline(1.0, color="grey", ls="--", lw=1)
    ax.axhline(-1.0, color="grey", ls="--", lw=1)
    ax.axhline(0.0, color="grey", ls=":", lw=0.8)
    ax.set_xlabel("r")
    ax.set_ylabel("H*")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_delta_bars(per_cell_deltas, path, title=None):
    """Bar chart of median degree of clustering per time point.

    `per_cell_deltas` maps ``(species, kind)`` to ``{time: [delta, ...]}``
    (the shape produced by reading a deltas table).
    """
    kinds = sorted({kind for _, kind in per_cell_deltas})
    fig, axes = plt.subplots(1, len(kinds), figsize=(5 * len(kinds), 4),
                             squeeze=False)
    for ax, kind in zip(axes[0], kinds):
        series = {sp: per_cell_deltas[(sp, k)]
                  for sp, k in per_cell_deltas if k == kind}
        species = sorted(series)
        times = sorted({t for s in series.values() for t in s})
        width = 0.8 / max(len(species), 1)
        for i, sp in enumerate(species):
            medians = [np.median(series[sp][t]) if t in series[sp] else 0.0
                       for t in times]
            offsets = np.arange(len(times)) + (i - (len(species) - 1) / 2) * width
            ax.bar(offsets, medians, width=width, label=sp)
        ax.set_xticks(np.arange(len(times)))
        ax.set_xticklabels([f"{t:g}" for t in times])
        ax.set_xlabel("time (h)")
        ax.set_ylabel("median degree of clustering")
        ax.set_title(kind)
        ax.legend(loc="best", frameon=False, fontsize="small")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
