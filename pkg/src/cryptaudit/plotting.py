"""Training-curve figures written next to the trace CSVs.

Figures are drawn on bare ``Figure`` objects with the Agg canvas, so no
display or pyplot state is involved and parallel jobs cannot interfere.
"""

from __future__ import annotations

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def _new(width=6.0, height=3.6):
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _finish(fig, ax, path, title):
    ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return path


def plot_mi_traces(traces: dict, path, title="MI estimate during training", reference=None):
    """One curve per label of per-epoch train MI (nats). ``reference`` draws a dashed line."""
    fig, ax = _new()
    for i, (label, trace) in enumerate(traces.items()):
        color = f"C{i % 10}"
        ax.plot(trace.epoch, trace.train_mi_nats, lw=1.2, color=color, label=f"{label} train")
        val = getattr(trace, "validation_mi_nats", None)
        if val and any(v == v for v in val):
            ax.plot(trace.epoch, val, lw=0.8, ls=":", color=color, label=f"{label} held out")
        if getattr(trace, "selected_epoch", None) is not None and val and any(v == v for v in val):
            ax.axvline(trace.selected_epoch, lw=0.6, color=color, alpha=0.5)
    if reference is not None:
        ax.axhline(reference, ls="--", lw=0.8, color="0.4", label=f"reference {reference:.2f}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MI estimate (nats)")
    return _finish(fig, ax, path, title)


def plot_cpa_traces(traces: dict, path, title="Classifier training"):
    """Train BCE (left axis) and train accuracy (right axis) per label."""
    fig, ax = _new()
    acc_ax = ax.twinx()
    for i, (label, trace) in enumerate(traces.items()):
        color = f"C{i % 10}"
        ax.plot(trace.epoch, trace.train_bce_nats, lw=1.2, color=color, label=label)
        acc_ax.plot(trace.epoch, trace.train_accuracy, lw=0.8, ls=":", color=color)
    ax.set_xlabel("epoch")
    ax.set_ylabel("train BCE (nats), solid")
    acc_ax.set_ylabel("train accuracy, dotted")
    acc_ax.set_ylim(0.4, 1.02)
    return _finish(fig, ax, path, title)


def plot_table(rows, path, title, metric_label):
    """Published value vs reproduced value per row, as paired bars. Rows are dicts."""
    fig, ax = _new(width=max(6.0, 0.9 * len(rows) + 2), height=3.6)
    labels = [r["row"] for r in rows]
    xs = range(len(rows))
    published = [r["published"] if r.get("published") is not None else float("nan") for r in rows]
    ours = [r["value"] if r.get("value") is not None else float("nan") for r in rows]
    ax.bar([x - 0.2 for x in xs], published, width=0.4, label="published", color="0.7")
    ax.bar([x + 0.2 for x in xs], ours, width=0.4, label="reproduced", color="C0")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(metric_label)
    return _finish(fig, ax, path, title)
