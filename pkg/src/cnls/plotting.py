"""Figure rendering for the command-line report paths.

Every function writes one PNG next to the delimited data it illustrates.
Rendering is deterministic (fixed style, no timestamps) so figures join the
byte-identical reproducibility contract of the data files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import FieldVector, Grid

_FIGSIZE = (6.4, 4.2)
_DPI = 120


def _new_axes(xlabel: str, ylabel: str, title: str):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def profile_figure(path, state: FieldVector, title: str = "minimizer profile") -> None:
    """Component moduli along the first axis (central slice above one dimension)."""
    grid = state.grid
    fig, ax = _new_axes("x", "|component|", title)
    x = grid.coords[0]
    for j, comp in enumerate(state.components):
        mag = np.abs(comp.values)
        while mag.ndim > 1:
            mag = mag[:, mag.shape[1] // 2]
        ax.plot(x, mag, label=f"component {j}")
    ax.legend()
    _save(fig, path)


def trace_figure(path, trace: np.ndarray, title: str = "energy descent") -> None:
    fig, ax = _new_axes("accepted step", "energy", title)
    ax.plot(np.arange(len(trace)), trace)
    _save(fig, path)


def conservation_figure(path, times: np.ndarray, charges_series: np.ndarray,
                        energy_series: np.ndarray) -> None:
    """Relative drifts of the conserved quantities on a log scale."""
    fig, ax = _new_axes("t", "relative drift", "conservation monitor")
    floor = 1e-18
    q0 = charges_series[0]
    for j in range(charges_series.shape[1]):
        scale = max(abs(q0[j]), floor)
        drift = np.abs(charges_series[:, j] - q0[j]) / scale
        ax.semilogy(times, np.maximum(drift, floor), label=f"mass {j}")
    e0 = energy_series[0]
    e_drift = np.abs(energy_series - e0) / max(abs(e0), floor)
    ax.semilogy(times, np.maximum(e_drift, floor), label="energy", linestyle="--")
    ax.legend()
    _save(fig, path)


def distance_figure(path, runs) -> None:
    """Orbit-distance time series, one line per (delta, seed) run."""
    fig, ax = _new_axes("t", "orbit distance", "perturbation response")
    for rep in runs:
        ax.semilogy(rep.times, np.maximum(rep.distances, 1e-18),
                    label=f"delta={rep.delta:g}, seed={rep.seed}")
    if len(list(runs)) <= 12:
        ax.legend(fontsize=7)
    _save(fig, path)


def sweep_figure(path, deltas: np.ndarray, epsilons: np.ndarray) -> None:
    fig, ax = _new_axes("delta", "eps(delta)", "stability response")
    mask = np.asarray(deltas) > 0
    if mask.any():
        ax.loglog(np.asarray(deltas)[mask], np.asarray(epsilons)[mask], "o-")
    _save(fig, path)


def diagnostics_figure(path, rows) -> None:
    """One bar per diagnostic: measured value against its tolerance."""
    rows = [r for r in rows if r.tolerance is not None and r.value is not None]
    fig, ax = _new_axes("log10(value / tolerance)", "", "diagnostic margins")
    names = [r.name for r in rows]
    ratios = [np.log10(max(abs(r.value), 1e-18) / r.tolerance) for r in rows]
    colors = ["tab:blue" if r.passed else "tab:red" for r in rows]
    ax.barh(names, ratios, color=colors)
    ax.axvline(0.0, color="k", linewidth=1)
    ax.tick_params(axis="y", labelsize=7)
    _save(fig, path)
