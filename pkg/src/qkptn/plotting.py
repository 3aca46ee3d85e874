"""Render run artifacts (gap scans, traces, schedules, comparisons) to files.

Figures are written next to the delimited outputs; the Agg backend keeps
this headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .annealsim import EvolutionTrace, Schedule  # noqa: E402
from .dmrg import GapScanResult  # noqa: E402
from .solvers import ComparisonTable  # noqa: E402


def plot_gap_scan(result: GapScanResult, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(result.s_grid, result.e0, "o-", label="E0", ms=3)
    ax1.plot(result.s_grid, result.e1, "s-", label="E1", ms=3)
    ax1.set_xlabel("s")
    ax1.set_ylabel("energy")
    ax1.legend()
    ax2.plot(result.s_grid, result.gaps, "o-", ms=3)
    ax2.axvline(result.argmin_s, ls="--", c="gray", lw=0.8)
    ax2.set_xlabel("s")
    ax2.set_ylabel("gap")
    ax2.set_title(f"g_min = {result.g_min:.4g} at s = {result.argmin_s:.3g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_trace(trace: EvolutionTrace, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(trace.times, trace.energies)
    ax1.set_xlabel("t")
    ax1.set_ylabel("energy")
    ax2.plot(trace.times, trace.overlaps)
    ax2.set_xlabel("t")
    ax2.set_ylabel("ground-state overlap")
    ax2.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_schedule(schedule: Schedule, path: str) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.plot(schedule.knots[:, 0], schedule.knots[:, 1], label=schedule.description)
    ax.plot([0, 1], [0, 1], ls="--", c="gray", lw=0.8, label="linear")
    ax.set_xlabel("t / T")
    ax.set_ylabel("s")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_comparison(table: ComparisonTable, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    colors = ["tab:green" if f else "tab:red" for f in table.feasible]
    ax.bar(table.solvers, table.values, color=colors)
    ax.set_ylabel("value")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
