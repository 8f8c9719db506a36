"""Figure rendering from validated solver outputs.

Three figures: the dual-variable convergence curve, the expert vs
reconstructed trajectory overlay, and the Monte Carlo study panels. Pure
file-in/file-out; inputs are never modified.
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schemas import check_same_grid, read_montecarlo, read_trace, read_trajectory

__all__ = ["plot_convergence", "plot_overlay", "plot_montecarlo"]


def plot_convergence(trace_csv, out_image):
    """Log-scale dual objective gap and step norm versus iteration."""
    trace = read_trace(trace_csv)
    gap = np.abs(trace.dual_objective - trace.dual_objective[-1])
    fig, (ax_obj, ax_step) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    positive = gap > 0
    if positive.any():
        ax_obj.semilogy(trace.iterations[positive], gap[positive],
                        "o-", color="tab:blue", ms=3)
    else:
        ax_obj.plot(trace.iterations, gap, "o-", color="tab:blue", ms=3)
    ax_obj.set_ylabel("dual objective gap")
    ax_obj.set_title("dual variable convergence")
    ax_obj.grid(True, which="both", alpha=0.3)

    steps = trace.step_norm
    finite = np.isfinite(steps) & (steps > 0)
    if finite.any():
        ax_step.semilogy(trace.iterations[finite], steps[finite],
                         "s-", color="tab:orange", ms=3)
    else:
        ax_step.plot(trace.iterations, np.nan_to_num(steps), "s-",
                     color="tab:orange", ms=3)
    ax_step.set_xlabel("iteration")
    ax_step.set_ylabel("step norm")
    ax_step.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_image, dpi=150)
    plt.close(fig)


def plot_overlay(expert_csv, recon_csv, out_image):
    """Per-coordinate overlay of the expert and reconstructed states."""
    expert = read_trajectory(expert_csv)
    recon = read_trajectory(recon_csv)
    check_same_grid(expert, recon)
    n = expert.states.shape[0]
    fig, axes = plt.subplots(n, 1, figsize=(7, 2.2 * n), sharex=True, squeeze=False)
    for i in range(n):
        ax = axes[i, 0]
        ax.plot(expert.times, expert.states[i], color="tab:blue", lw=1.8,
                label="expert")
        ax.plot(recon.times, recon.states[i], color="tab:red", lw=1.2,
                ls="--", label="reconstructed")
        ax.set_ylabel(f"x{i+1}")
        ax.grid(True, alpha=0.3)
    axes[0, 0].set_title("trajectory reproduction")
    axes[0, 0].legend(loc="best")
    axes[-1, 0].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(out_image, dpi=150)
    plt.close(fig)


def _stats(table):
    finite = table.mse[np.isfinite(table.mse)]
    failures = sum(
        1 for status, mse in zip(table.statuses, table.mse)
        if status != "converged" or not math.isfinite(mse)
    )
    if finite.size:
        return {
            "trials": len(table.statuses),
            "median": float(np.median(finite)),
            "mean": float(np.mean(finite)),
            "max": float(np.max(finite)),
            "std": float(np.std(finite)),
            "failures": failures,
        }
    return {"trials": len(table.statuses), "median": float("nan"),
            "mean": float("nan"), "max": float("nan"), "std": float("nan"),
            "failures": failures}


def plot_montecarlo(summary_csv, out_image):
    """Scatter, box, and statistics panels for the per-trial MSE study."""
    table = read_montecarlo(summary_csv)
    stats = _stats(table)
    finite_mask = np.isfinite(table.mse)
    fig, (ax_sc, ax_box, ax_tab) = plt.subplots(
        1, 3, figsize=(12, 4), gridspec_kw={"width_ratios": [2, 1, 1.2]}
    )
    if finite_mask.any():
        ax_sc.semilogy(table.trials[finite_mask], table.mse[finite_mask],
                       "o", color="tab:blue", ms=4)
    ax_sc.set_xlabel("trial")
    ax_sc.set_ylabel("trajectory MSE")
    ax_sc.set_title("per-trial reconstruction error")
    ax_sc.grid(True, which="both", alpha=0.3)

    if finite_mask.any():
        ax_box.boxplot([table.mse[finite_mask]], tick_labels=["MSE"])
        ax_box.set_yscale("log")
    ax_box.set_title("distribution")
    ax_box.grid(True, which="both", alpha=0.3)

    ax_tab.axis("off")
    rows = [
        ["trials", f"{stats['trials']}"],
        ["median", f"{stats['median']:.3e}"],
        ["mean", f"{stats['mean']:.3e}"],
        ["max", f"{stats['max']:.3e}"],
        ["std", f"{stats['std']:.3e}"],
        ["failures", f"{stats['failures']}"],
    ]
    table_artist = ax_tab.table(cellText=rows, loc="center", cellLoc="left")
    table_artist.scale(1.0, 1.4)
    ax_tab.set_title("summary")
    fig.tight_layout()
    fig.savefig(out_image, dpi=150)
    plt.close(fig)
    return stats
