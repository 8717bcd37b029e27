"""Figures written next to the CSV outputs (PNG, headless backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .tracked_stream import CLASSES  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 3.6),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_windows(series, path, model=None, title=None):
    """Undetermined percentage per window.

    ``series`` maps a label to a list of ``WindowCount``; ``model`` is an
    optional ``ModelCurve`` drawn as ``100 * (1 - L_i)``.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, counts in series.items():
            ax.plot([c.index for c in counts], [c.percent for c in counts], lw=1, label=label)
        if model is not None:
            ax.plot(model.index, 100 * model.undetermined_fraction, "k--", lw=1, label="model")
        ax.set_xlabel("window index")
        ax.set_ylabel("undetermined characters (%)")
        ax.set_ylim(-2, 102)
        if title:
            ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def plot_propagation(rows, path):
    """Stacked per-class counts of undetermined characters along the output."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = np.array([r["start"] for r in rows]) / 1e6
        ys = [np.array([r[c] for r in rows]) for c in CLASSES]
        ax.stackplot(x, *ys, labels=CLASSES, alpha=0.8)
        ax.set_xlabel("decompressed position (MB)")
        ax.set_ylabel("undetermined characters per window")
        ax.legend(loc="upper right")
        return _save(fig, path)


def plot_model(curve, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(curve.index, 100 * curve.undetermined_fraction, "k-", lw=1)
        ax.set_xlabel("block index i")
        ax.set_ylabel("1 - L_i (%)")
        return _save(fig, path)


def plot_speedup(rows, path):
    """Throughput and speedup against thread count; rows are dicts from the bench."""
    with plt.rc_context(STYLE):
        fig, (a1, a2) = plt.subplots(1, 2)
        t = [r["threads"] for r in rows]
        a1.plot(t, [r["mb_per_s"] for r in rows], "o-")
        a1.set_xlabel("threads")
        a1.set_ylabel("MB/s (decompressed)")
        a2.plot(t, [r["speedup"] for r in rows], "o-", label="measured")
        a2.plot(t, t, "k:", lw=1, label="linear")
        a2.set_xlabel("threads")
        a2.set_ylabel("speedup")
        a2.legend()
        return _save(fig, path)


def plot_seek(reports, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        fr = [r.fraction if r.fraction is not None else r.seek_offset for r in reports]
        pct = [r.percent_unambiguous or 0.0 for r in reports]
        ax.bar([f"{f:.2f}" for f in fr], pct)
        ax.set_xlabel("seek position (fraction of file)")
        ax.set_ylabel("unambiguous sequences (%)")
        ax.set_ylim(0, 105)
        return _save(fig, path)


def figure_path(csv_path):
    """PNG path sitting next to a CSV path."""
    s = str(csv_path)
    return (s[:-4] if s.endswith(".csv") else s) + ".png"
