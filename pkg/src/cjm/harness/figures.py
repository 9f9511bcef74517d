"""Figure rendering for bench and stress reports.

Matplotlib is imported lazily with the Agg backend so headless runs work
and library users who never plot never pay for the import.  Each function
writes PNG files next to the delimited output and returns the paths.
"""

from __future__ import annotations

from pathlib import Path
from typing import List


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_bench_figures(report, out_dir) -> List[Path]:
    """Throughput-vs-threads line plot and an uncontended-latency bar."""
    plt = _plt()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    by_impl = {}
    for row in report.rows:
        if row.mode == "contended":
            by_impl.setdefault(row.impl, []).append((row.threads, row.ops_per_sec))

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for impl, pts in sorted(by_impl.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=impl)
    ax.set_xlabel("threads")
    ax.set_ylabel("lock+unlock ops/sec")
    ax.set_title("contended throughput, one monitor")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = out / "bench_throughput.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    uncontended = [(r.impl, r.ns_per_op) for r in report.rows if r.mode == "uncontended"]
    if uncontended:
        fig, ax = plt.subplots(figsize=(4.0, 4.0))
        labels = [u[0] for u in uncontended]
        values = [u[1] for u in uncontended]
        ax.bar(labels, values, color=["tab:blue", "tab:orange"][: len(labels)])
        ax.set_ylabel("ns per lock+unlock")
        ax.set_title("uncontended latency")
        for i, v in enumerate(values):
            ax.text(i, v, f"{v:,.0f}", ha="center", va="bottom", fontsize=9)
        fig.tight_layout()
        path = out / "bench_uncontended.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def render_stress_figures(reports, out_dir) -> List[Path]:
    """Ops/sec and instrumentation-counter bars across stress runs."""
    plt = _plt()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    labels = [f"s{r.seed}/{r.strategy}" for r in reports]
    axes[0].bar(labels, [r.ops_per_sec for r in reports], color="tab:blue")
    axes[0].set_ylabel("ops/sec")
    axes[0].set_title("stress throughput")
    axes[0].tick_params(axis="x", rotation=45)

    keys = ("parks", "unparks", "swaps", "handoffs")
    width = 0.8 / len(keys)
    xs = range(len(reports))
    for i, key in enumerate(keys):
        axes[1].bar(
            [x + i * width for x in xs],
            [r.counters[key] for r in reports],
            width=width,
            label=key,
        )
    axes[1].set_xticks([x + 1.5 * width for x in xs])
    axes[1].set_xticklabels(labels, rotation=45)
    axes[1].set_ylabel("events")
    axes[1].set_title("instrumentation")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    path = out / "stress_counters.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)
    return paths
