"""Figures for sweeps and cut studies, written straight to files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless; never opens a window

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .circuit import FrequencySweep  # noqa: E402
from .params import F_OPERATING  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 3.6),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _mark_operating(ax):
    ax.axvline(F_OPERATING / 1e6, color="0.5", lw=0.8, ls=":", label="13.56 MHz")


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_sweep(sweep: FrequencySweep, path, title: str = "", f_detected: float | None = None) -> Path:
    """|S11| and its deviation from the bare probe over one sweep."""
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.0))
        f = sweep.freqs / 1e6
        ax1.plot(f, np.abs(sweep.s11), lw=1.0, label="loaded")
        ax1.plot(f, np.abs(sweep.baseline()), lw=0.8, ls="--", color="0.4", label="bare probe")
        ax1.set_ylabel("|S11|")
        ax1.legend(loc="lower left")
        ax2.plot(f, sweep.deviation(), lw=1.0, color="C1")
        if f_detected is not None:
            ax2.axvline(f_detected / 1e6, color="C3", lw=0.8, label=f"peak {f_detected / 1e6:.2f} MHz")
        _mark_operating(ax2)
        ax2.set_xlabel("frequency (MHz)")
        ax2.set_ylabel("|S11 - S11 bare|")
        ax2.legend(loc="upper right")
        if title:
            ax1.set_title(title)
        return _save(fig, path)


def plot_cut_progression(sweeps: list[FrequencySweep], rows: list[tuple[int, float | None]],
                         path, title: str = "", noise_floor: float | None = None) -> Path:
    """Deviation traces for 0..n cuts overlaid, detected peaks marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for sweep, (n, f_det) in zip(sweeps, rows):
            label = f"{n} cut{'s' if n != 1 else ''}"
            label += f" ({f_det / 1e6:.1f} MHz)" if f_det is not None else " (no peak)"
            line, = ax.plot(sweep.freqs / 1e6, sweep.deviation(), lw=1.0, label=label)
            if f_det is not None:
                ax.axvline(f_det / 1e6, color=line.get_color(), lw=0.6, ls="--")
        if noise_floor is not None:
            ax.axhline(noise_floor, color="0.3", lw=0.8, ls=":", label="noise floor")
        ax.set_xlabel("frequency (MHz)")
        ax.set_ylabel("|S11 - S11 bare|")
        ax.legend(loc="upper right")
        if title:
            ax.set_title(title)
        return _save(fig, path)
