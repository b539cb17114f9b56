"""Figure rendering for the CLI report paths.

Each renderer takes the same records that go into the CSV and writes a PNG
next to it. Figures are a convenience view; the CSV stays the interface.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 120,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 12,
    "legend.fontsize": 9,
    "lines.linewidth": 1.8,
    "lines.markersize": 5,
    "grid.alpha": 0.3,
    "axes.grid": True,
}


def _scope_label(scope: str) -> str:
    if scope == "delay":
        return "delay estimation bound (s$^2$)"
    return "estimation bound (full trace)"


def plot_pareto(rows, path, scope: str = "delay", timeshare=None) -> None:
    """Capacity/distortion boundary; rows are (lambda, D, C) tuples."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        d = [r[1] for r in rows]
        c = [r[2] for r in rows]
        ax.plot(d, c, "o-", color="tab:blue", label="joint design")
        if timeshare:
            ax.plot([t[0] for t in timeshare], [t[1] for t in timeshare],
                    "--", color="tab:gray", label="time sharing")
        ax.set_xlabel(_scope_label(scope))
        ax.set_ylabel("capacity (bits per block)")
        ax.set_title("capacity vs sensing distortion")
        if min(d) > 0 and max(d) / min(d) > 30:
            ax.set_xscale("log")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)


def plot_compare(rows, path, scope: str = "delay") -> None:
    """Joint vs time-sharing capacity; rows are (D, C_joint, C_timeshare)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        d = [r[0] for r in rows]
        ax.plot(d, [r[1] for r in rows], "o-", color="tab:blue", label="joint design")
        ax.plot(d, [r[2] for r in rows], "s--", color="tab:gray", label="time sharing")
        ax.set_xlabel(_scope_label(scope))
        ax.set_ylabel("capacity (bits per block)")
        ax.set_title("joint design vs time sharing")
        if min(d) > 0 and max(d) / min(d) > 30:
            ax.set_xscale("log")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)


def plot_convergence(rows, path) -> None:
    """Diagnostics vs N; rows are (N, quantity, param, value)."""
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.8))
        panels = [("slln_residual", "weighted-sum residuals", axes[0]),
                  ("order_nonzero", "normalized sums, nonzero slope", axes[1]),
                  ("blockdiag_error", "cross-block error", axes[2])]
        for quantity, title, ax in panels:
            params = sorted({r[2] for r in rows if r[1] == quantity})
            for param in params:
                pts = sorted((r[0], r[3]) for r in rows
                             if r[1] == quantity and r[2] == param)
                label = f"t={param}" if param.isdigit() else param
                ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=label)
            ax.set_xlabel("N")
            ax.set_title(title)
            ax.legend()
        fig.savefig(path)
        plt.close(fig)
