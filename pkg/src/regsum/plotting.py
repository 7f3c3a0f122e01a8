"""Matplotlib figures for the ``report`` command.

matplotlib is imported lazily so the library and the other CLI commands
never need it.  Figures are written as PNG with the Agg backend.
"""
from __future__ import annotations

import math
import os
from typing import Sequence

STYLE = {
    "figure.figsize": (5.0, 3.2),
    "figure.dpi": 150,
    "font.size": 8,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "axes.linewidth": 0.6,
    "legend.fontsize": 7,
    "legend.frameon": False,
    "lines.linewidth": 1.0,
    "lines.markersize": 3.5,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "savefig.bbox": "tight",
    "mathtext.fontset": "stix",
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    # fixed metadata keeps repeated runs byte-stable
    fig.savefig(path, metadata={"Software": None})
    return path


def plot_relative_residuals(series: Sequence, path: str, title: str = "") -> str:
    """|residual/main| against x on log-log axes, one line per equation."""
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for s in series:
            rom = [abs(v) for v in s.residual_over_main]
            if not any(math.isfinite(v) and v > 0 for v in rom):
                continue
            label = s.eq.tag if s.variant == "printed" else f"{s.eq.tag} ({s.variant})"
            ax.loglog(s.checkpoints, rom, marker="o", label=label)
        ax.set_xlabel("$x$")
        ax.set_ylabel("$|\\mathrm{lhs}-\\mathrm{main}|\\,/\\,\\mathrm{main}$")
        if title:
            ax.set_title(title)
        ax.legend(loc="best", ncol=2)
        _save(fig, path)
        plt.close(fig)
    return path


def plot_residual_vs_bound(s, bound: Sequence[float], path: str) -> str:
    """|residual| next to the error-term shape scaled by the fitted constant."""
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(s.checkpoints, [abs(r) if r else math.nan for r in s.residual], "o-",
                  label="$|$residual$|$")
        if s.bound_constant:
            ax.loglog(s.checkpoints, [s.bound_constant * b for b in bound], "--",
                      label="fitted constant $\\times$ error shape")
        ax.set_xlabel("$x$")
        ax.set_title(s.eq.tag)
        ax.legend(loc="best")
        _save(fig, path)
        plt.close(fig)
    return path


def plot_k2(fit, variants: dict, path: str) -> str:
    """Pointwise K2(x) estimates with the fitted band and the series values."""
    plt = _pyplot()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogx(fit.x_points, fit.pointwise, ".", color="0.35", label="$K_2(x)$ pointwise")
        ax.axhline(fit.estimate, color="k", lw=0.8, label="fit")
        ax.axhspan(fit.estimate - 3 * fit.stderr, fit.estimate + 3 * fit.stderr, color="0.85",
                   label="fit $\\pm 3$ SE")
        for (name, value), ls in zip(sorted(variants.items()), ("-.", ":", "--")):
            ax.axhline(value, ls=ls, lw=1.0, label=name)
        ax.set_xlabel("$x$")
        ax.set_ylabel("$K_2$")
        ax.legend(loc="best")
        _save(fig, path)
        plt.close(fig)
    return path
