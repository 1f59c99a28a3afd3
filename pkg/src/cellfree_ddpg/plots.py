"""Figure rendering for the experiment reports.

Every harness experiment drops a PNG next to its CSV output.  The CSVs
stay the canonical data; figures are for eyeballing runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_EE_LABEL = "energy efficiency (bit/s/Hz per mW)"


def _new_axes(xlabel: str, ylabel: str = _EE_LABEL):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def convergence_figure(episodes: np.ndarray, curves: dict[str, np.ndarray],
                       path: str) -> None:
    """EE vs training episode, one line per method."""
    fig, ax = _new_axes("episode")
    for label, values in curves.items():
        ax.plot(episodes, values, label=label)
    ax.legend(loc="best", fontsize=9)
    _save(fig, path)


def sweep_figure(x: np.ndarray, means: np.ndarray, stds: np.ndarray,
                 xlabel: str, path: str, log_x: bool = False) -> None:
    """Replicate-mean EE with a std band over a swept parameter."""
    fig, ax = _new_axes(xlabel)
    ax.errorbar(x, means, yerr=stds, marker="o", capsize=3)
    if log_x:
        ax.set_xscale("log")
    _save(fig, path)


def category_figure(labels: list[str], means: np.ndarray, stds: np.ndarray,
                    xlabel: str, path: str) -> None:
    """Bar chart for categorical sweeps (hidden sizes, baselines)."""
    fig, ax = _new_axes(xlabel)
    pos = np.arange(len(labels))
    ax.bar(pos, means, yerr=stds, capsize=3, width=0.6)
    ax.set_xticks(pos)
    ax.set_xticklabels(labels, fontsize=9)
    _save(fig, path)
