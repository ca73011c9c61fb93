"""Visualization utilities"""

# Heat maps of precision and cost across benchmarks and sensitivities

from typing import Optional, Sequence

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Rectangle

# Matplotlib settings
plt.rcParams["text.usetex"] = False
plt.rcParams["font.sans-serif"] = "Helvetica"
plt.rcParams["font.family"] = "sans-serif"
plt.rcParams["font.size"] = 12
plt.rcParams["pdf.fonttype"] = 42  # TrueType fonts


def error_reduction(errors: np.ndarray, baseline: np.ndarray) -> np.ndarray:
    """Percentage of baseline errors removed by each configuration.

    Parameters
    ----------
    errors : ndarray
        Error counts, shape (num_programs, num_strategies); NaN marks a timeout.
    baseline : ndarray
        Error counts of the baseline sensitivity, shape (num_programs,).

    Returns
    -------
    ndarray
        ``100 * (baseline - errors) / baseline``; 0 where the baseline is 0.
    """
    assert errors.ndim == 2 and baseline.ndim == 1, "errors must be 2D, baseline 1D"
    assert errors.shape[0] == baseline.shape[0], "one baseline count per program"
    base = baseline[:, None].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(base > 0, 100.0 * (base - errors) / base, 0.0)
    return np.where(np.isnan(errors), np.nan, out)


def relative_cost(times: np.ndarray, baseline: np.ndarray) -> np.ndarray:
    """Slowdown of each configuration relative to the baseline time (NaN for timeouts)."""
    assert times.shape[0] == baseline.shape[0], "one baseline time per program"
    with np.errstate(divide="ignore", invalid="ignore"):
        return times / np.maximum(baseline[:, None].astype(float), 1e-9)


def _heatmap(values: np.ndarray, programs: Sequence[str], strategies: Sequence[str],
             title: str, cmap: str, fmt: str, output_filename: Optional[str]):
    assert values.shape == (len(programs), len(strategies)), "table shape mismatch"
    fig, ax = plt.subplots(figsize=(1.2 * len(strategies) + 3, 0.4 * len(programs) + 2))
    masked = np.ma.masked_invalid(values)
    im = ax.imshow(masked, cmap=cmap, aspect="auto")
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            if np.isnan(values[i, j]):
                # timeout
                ax.add_patch(Rectangle((j - 0.5, i - 0.5), 1, 1, fill=False, hatch="///",
                                       edgecolor="gray", linewidth=0))
            else:
                ax.text(j, i, format(values[i, j], fmt), ha="center", va="center", fontsize=8)
    ax.set_xticks(range(len(strategies)))
    ax.set_xticklabels(strategies, rotation=45, ha="right")
    ax.set_yticks(range(len(programs)))
    ax.set_yticklabels(programs)
    ax.set_title(title)
    fig.colorbar(im, ax=ax)

    if output_filename is not None:
        plt.savefig(f"{output_filename}", dpi=300, bbox_inches="tight")
        print(f"Plot saved to: {output_filename}")
        plt.close()
    else:
        return fig


def plot_precision_heatmap(
    reduction: np.ndarray,
    programs: Sequence[str],
    strategies: Sequence[str],
    output_filename: Optional[str] = None,
):
    """Error reduction relative to flow sensitivity, one cell per (program, strategy).

    Timed-out cells are NaN and drawn hatched.
    """
    return _heatmap(reduction, programs, strategies, "Error reduction vs fs (%)",
                    "Greens", ".0f", output_filename)


def plot_performance_heatmap(
    slowdown: np.ndarray,
    programs: Sequence[str],
    strategies: Sequence[str],
    output_filename: Optional[str] = None,
):
    """Analysis time relative to flow sensitivity; timed-out cells are hatched."""
    return _heatmap(slowdown, programs, strategies, "Time relative to fs",
                    "Oranges", ".1f", output_filename)
