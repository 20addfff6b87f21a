"""PNG figures for sweep reports (headless matplotlib)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _series(summary, x_key: str, group_keys: tuple[str, ...], y):
    groups: dict[tuple, list] = {}
    for c in summary:
        val = y(c)
        if val is None:
            continue
        groups.setdefault(tuple(c[k] for k in group_keys), []).append((c[x_key], val))
    return {k: sorted(v) for k, v in sorted(groups.items())}


def _label(keys: tuple[str, ...], values: tuple) -> str:
    return ", ".join(f"{k}={v}" if k != "model" else str(v) for k, v in zip(keys, values))


def nmse_vs_size(summary, path: Path) -> bool:
    keys = ("model", "b", "input_id")
    series = _series(summary, "N", keys, lambda c: c["nmse"]["mean"])
    if not series or all(len(v) < 2 for v in series.values()):
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    for k, pts in series.items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=_label(keys, k))
    ax.set_xlabel("reservoir size N")
    ax.set_ylabel("mean NMSE")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def nmse_histograms(summary, path: Path) -> bool:
    cells = [c for c in summary if c["nmse"]["histogram"]["counts"]]
    if not cells:
        return False
    n = len(cells)
    cols = min(n, 4)
    rows = -(-n // cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3 * cols, 2.4 * rows), squeeze=False)
    for ax, c in zip(axes.ravel(), cells):
        edges = np.asarray(c["nmse"]["histogram"]["edges"])
        counts = np.asarray(c["nmse"]["histogram"]["counts"])
        ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge")
        ax.set_title(f"{c['model']} N={c['N']} b={c['b']} {c['input_id']}", fontsize=7)
        ax.tick_params(labelsize=6)
    for ax in axes.ravel()[n:]:
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def dynamic_range_box(rows, path: Path) -> bool:
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if r["status"] == "ok" and r["wout_db"] is not None:
            groups.setdefault((r["input_id"], r["model"], r["N"], r["b"]), []).append(r["wout_db"])
    if not groups:
        return False
    keys = sorted(groups)
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(keys) + 2), 4))
    ax.boxplot([groups[k] for k in keys])
    ax.set_xticks(range(1, len(keys) + 1))
    ax.set_xticklabels([f"{m}\n{i}\nN={n} b={b}" for i, m, n, b in keys], fontsize=6)
    ax.set_ylabel("W_out dynamic range (dB)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def blowup_vs_b(summary, path: Path) -> bool:
    keys = ("model", "N", "input_id")
    series = _series(summary, "b", keys, lambda c: 100 * c["blowup_rate"])
    if not any(len(v) >= 2 for v in series.values()):
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    for k, pts in series.items():
        xs, ys = zip(*pts)
        ax.plot([100 * x for x in xs], ys, marker="o", label=_label(keys, k))
    ax.set_xlabel("noise scaling b (%)")
    ax.set_ylabel("blowup rate (%)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def mc_curves(summary, path: Path) -> bool:
    cells = [c for c in summary if c["mc"] and c["mc"].get("per_delay_mean")]
    if not cells:
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in cells:
        curve = c["mc"]["per_delay_mean"]
        ax.plot(range(1, len(curve) + 1), curve, label=f"{c['model']} N={c['N']} b={c['b']} (MC={c['mc']['mean']:.1f})")
    ax.set_xlabel("delay k")
    ax.set_ylabel("squared correlation")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_all(summary, rows, out_dir) -> dict[str, str]:
    """Render every figure that the data supports; returns name -> path."""
    out = Path(out_dir)
    written = {}
    for name, fn, data in (
        ("fig_nmse_vs_size", nmse_vs_size, summary),
        ("fig_nmse_hist", nmse_histograms, summary),
        ("fig_dynamic_range", dynamic_range_box, rows),
        ("fig_blowup", blowup_vs_b, summary),
        ("fig_mc", mc_curves, summary),
    ):
        p = out / f"{name}.png"
        if fn(data, p):
            written[name] = str(p)
    return written
