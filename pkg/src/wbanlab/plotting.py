"""Figures for the ``report`` command.

Uses the Agg backend so reports render headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def new_figure(width=6.0, height=3.2):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def save(fig, path):
    with plt.rc_context(RC):
        fig.tight_layout()
        fig.savefig(path)
    plt.close(fig)
    return path


def plot_success_rates(rows, path):
    """Horizontal bars of success rate per scenario.

    ``rows`` are dicts with ``scenario``, ``trials`` and ``successes``.
    """
    fig, ax = new_figure(6.0, 0.35 * len(rows) + 1.2)
    names = [r["scenario"] for r in rows]
    rates = [r["successes"] / r["trials"] if r["trials"] else 0.0 for r in rows]
    ax.barh(names, rates, color="#b2182b")
    ax.set_xlim(0, 1.05)
    ax.invert_yaxis()
    ax.set_xlabel("fraction of seeded trials where the adversary succeeded")
    for y, (rate, r) in enumerate(zip(rates, rows)):
        ax.text(min(rate, 1.0) + 0.01, y, f"{r['successes']}/{r['trials']}", va="center", fontsize=7)
    return save(fig, path)


def plot_dictionary_timing(rows, path):
    """Attack time against dictionary size; ``rows`` carry ``size`` and ``seconds``."""
    fig, ax = new_figure(4.5, 3.0)
    sizes = [r["size"] for r in rows]
    secs = [r["seconds"] for r in rows]
    ax.plot(sizes, secs, marker="o", color="#2166ac")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("dictionary size (words)")
    ax.set_ylabel("offline search time (s)")
    ax.set_title("Protocol III offline dictionary attack")
    return save(fig, path)
