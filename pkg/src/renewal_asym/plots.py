"""Figure rendering for the CLI report path: every panel lands next to the
CSV it visualizes."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "plot_discrete_trace",
    "plot_continuous_trace",
    "plot_transform_ladder",
    "plot_tauberian",
]

_FIGSIZE = (7.0, 4.2)


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_discrete_trace(tr, path, C_hat=None) -> Path:
    """Two panels: the normalized solution and the compensated sequence y_n."""
    path = Path(path)
    n = np.arange(1, tr.N + 1)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=_FIGSIZE)
    pos = tr.x_tilde[1:] > 0
    if pos.any():
        ax1.semilogy(n[pos], tr.x_tilde[1:][pos], lw=0.8)
    ax1.set_xlabel("n")
    ax1.set_ylabel(r"$\tilde x_n$")
    ax1.grid(alpha=0.3)
    ax2.plot(n, tr.y[1:], lw=0.8)
    if C_hat is not None:
        ax2.axhline(C_hat, color="C3", ls="--", lw=1.0, label=f"C = {C_hat:.4g}")
        ax2.legend(frameon=False)
    ax2.set_xscale("log")
    ax2.set_xlabel("n")
    ax2.set_ylabel(r"$y_n = \tilde x_n\, n^{-\gamma}$")
    ax2.grid(alpha=0.3)
    return _finish(fig, path)


def plot_continuous_trace(tr, path) -> Path:
    """Solution g(t) on a log axis next to the compensated H(t)."""
    path = Path(path)
    t = tr.grid.nodes
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=_FIGSIZE)
    pos = tr.g > 0
    if pos.any():
        ax1.semilogy(t[pos], tr.g[pos], lw=0.8)
    ax1.set_xlabel("t")
    ax1.set_ylabel("g(t)")
    ax1.grid(alpha=0.3)
    ax2.plot(t, tr.H, lw=0.8)
    ax2.set_xlabel("t")
    ax2.set_ylabel(r"$H(t) = g(t)\,(t+d)^{-\gamma}$")
    ax2.grid(alpha=0.3)
    return _finish(fig, path)


def plot_transform_ladder(sample, path) -> Path:
    """L, R*, and G against s."""
    path = Path(path)
    s = np.asarray(sample.s_values)
    fig, axes = plt.subplots(1, 3, figsize=(9.5, 3.6))
    for ax, vals, label in zip(axes,
                               (sample.L, sample.Rstar, sample.G),
                               ("L(s)", "R*(s)", "G(s)")):
        ax.plot(s, vals, "o-", lw=0.9, ms=3)
        ax.set_xscale("log")
        ax.set_xlabel("s")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_tauberian(report, path) -> Path:
    """Both ladders with their extrapolated limits."""
    path = Path(path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=_FIGSIZE)
    ax1.plot(report.s_ladder, report.K_estimates, "o-", ms=4)
    ax1.axhline(report.K_limit, color="C3", ls="--", lw=1.0,
                label=f"limit = {report.K_limit:.4g}")
    ax1.set_xscale("log")
    ax1.invert_xaxis()
    ax1.set_xlabel("s")
    ax1.set_ylabel(rf"$s^{{{report.rho:.3g}}}\,|G^{{({report.k})}}(s)|$")
    ax1.legend(frameon=False)
    ax1.grid(alpha=0.3)
    ax2.plot(report.x_ladder, report.U_ratios, "o-", ms=4)
    ax2.axhline(report.U_limit, color="C3", ls="--", lw=1.0,
                label=f"limit = {report.U_limit:.4g}")
    ax2.set_xscale("log")
    ax2.set_xlabel("x")
    ax2.set_ylabel(rf"$U(x)/x^{{{report.rho:.3g}}}$")
    ax2.legend(frameon=False)
    ax2.grid(alpha=0.3)
    return _finish(fig, path)
