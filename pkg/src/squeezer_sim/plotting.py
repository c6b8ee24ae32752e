"""Matplotlib figures written next to the delimited output files."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (6.4, 4.0),
    "savefig.dpi": 150,
}
TRACE_COLORS = {"shot": "0.3", "squeezed": "tab:red", "antisqueezed": "tab:blue"}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_spectrum(traces, path, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for t in traces:
            ax.semilogx(t.frequency, t.level_db, color=TRACE_COLORS.get(t.label), label=t.label)
        for art in traces[0].metadata.get("artifacts", []):
            if art["kind"] == "mains":
                ax.axvline(art["frequency_hz"], color="0.7", lw=0.6, ls=":")
        ax.set_xlabel("Frequency [Hz]")
        ax.set_ylabel("Noise relative to shot noise [dB]")
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_error_signal(trace, path, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = trace.sweep
        xlabel = f"{trace.sweep_name} [{trace.sweep_unit}]"
        if trace.sweep_unit == "Hz" and np.max(np.abs(x)) >= 1e6:
            x, xlabel = x / 1e6, f"{trace.sweep_name} [MHz]"
        ax.plot(x, trace.error, color="k")
        ax.axhline(0.0, color="0.6", lw=0.6)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("Error signal [a.u.]")
        if not trace.discriminating:
            ax.text(0.5, 0.9, "no discrimination", transform=ax.transAxes, ha="center")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_loop(freqs, suppression, path, ugf=None, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(freqs, suppression, color="k")
        if ugf:
            ax.axvline(ugf, color="tab:red", ls="--", lw=0.8, label="unity gain")
            ax.legend(loc="best")
        ax.set_xlabel("Frequency [Hz]")
        ax.set_ylabel("|1/(1+G)|")
        if title:
            ax.set_title(title)
        return _save(fig, path)
