"""Figure rendering for clustering run reports (file output only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["save_error_trace_figure"]


def save_error_trace_figure(traces, path, title="Model error per outer iteration"):
    """Plot one model-error curve per seed and write the figure to ``path``.

    ``traces`` maps a seed to its list of per-iteration model errors.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for seed, errors in sorted(traces.items()):
        ax.plot(range(1, len(errors) + 1), errors, marker=".", label=f"seed {seed}")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("model error")
    ax.set_title(title)
    if traces:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
