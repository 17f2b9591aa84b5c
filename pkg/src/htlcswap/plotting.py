"""Timeline figures for schedules and traces."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _arc_label(arc):
    return f"{arc[0]}→{arc[1]}"


def plot_schedule(schedule, path):
    """One bar per contract from its creation step to its timeout."""
    arcs = sorted(schedule.graph.arcs, key=lambda a: (schedule.create_time[a], a))
    owners = sorted(schedule.protectors)
    colors = {o: plt.cm.tab10(i % 10) for i, o in enumerate(owners)}
    fig, ax = plt.subplots(figsize=(7, 0.4 * len(arcs) + 1.2))
    for y, a in enumerate(arcs):
        start, end = schedule.create_time[a], schedule.timeout[a]
        ax.barh(y, end - start, left=start, color=colors[schedule.hashlock_owner[a]], alpha=0.7)
        ax.plot([end], [y], "k|", markersize=12)
    ax.set_yticks(range(len(arcs)), [_arc_label(a) for a in arcs])
    ax.axvline(schedule.anchor, color="grey", linestyle="--", linewidth=1)
    ax.set_xlabel("step")
    ax.set_title(f"{schedule.protocol} schedule (claims start at {schedule.anchor})")
    handles = [plt.Rectangle((0, 0), 1, 1, color=colors[o], alpha=0.7) for o in owners]
    ax.legend(handles, [f"hashlock of {o}" for o in owners], loc="lower right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


_MARKERS = {"create": ("o", "tab:blue"), "claim": ("*", "tab:green"), "refund": ("x", "tab:red")}


def plot_trace(trace, path):
    """Contract lifetimes as realized in a run, with claims and refunds marked."""
    g = trace.final.graph
    arcs = g.sorted_arcs
    fig, ax = plt.subplots(figsize=(7, 0.4 * len(arcs) + 1.2))
    row = {a: i for i, a in enumerate(arcs)}
    for a, c in trace.final.contracts.items():
        ax.plot([c.since, c.at], [row[a], row[a]], color="lightgrey", linewidth=4, zorder=1)
    for e in trace.events:
        if e.event in _MARKERS and e.arc is not None:
            m, col = _MARKERS[e.event]
            ax.scatter([e.step], [row[e.arc]], marker=m, color=col, zorder=2, label=e.event)
        elif e.event == "abort":
            ax.axvline(e.step, color="tab:red", linestyle=":", linewidth=1)
    handles, labels = ax.get_legend_handles_labels()
    seen = dict(zip(labels, handles))
    if seen:
        ax.legend(seen.values(), seen.keys(), loc="upper left", bbox_to_anchor=(1.0, 1.0), fontsize="small")
    ax.set_yticks(range(len(arcs)), [_arc_label(a) for a in arcs])
    ax.set_xlabel("step")
    ax.set_title("run timeline")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
