"""Report rendering: per-token HTML heatmaps and matplotlib figures."""

from __future__ import annotations

import html
from datetime import datetime, timezone

import numpy as np

# diverging scale anchored at zero: white -> red (positive) / blue (negative)
_RED = (214, 39, 40)
_BLUE = (31, 119, 180)


def token_color(value: float, scale: float) -> str:
    """Background color for one value given the instance's max absolute value."""
    a = 0.0 if scale <= 0 else min(abs(float(value)) / scale, 1.0)
    base = _RED if value > 0 else _BLUE
    rgb = [round(255 + a * (c - 255)) for c in base]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def instance_colors(values) -> list[str]:
    v = np.asarray(values, dtype=float)
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    return [token_color(x, scale) for x in v]


_STYLE = """body { font-family: sans-serif; margin: 2em; }
h2 { margin-top: 1.5em; }
.row { margin: 0.4em 0; line-height: 2em; }
.idx { color: #888; display: inline-block; width: 3.5em; }
.tok { padding: 0.15em 0.25em; margin: 0 0.05em; border-radius: 3px; }"""


def render_heatmap(sections: dict[str, list[tuple[list[str], np.ndarray]]],
                   timestamp: bool = True) -> str:
    """HTML page with one section per explainer and one row per instance.

    ``sections`` maps explainer name to ``(tokens, values)`` pairs.  Token
    backgrounds are shaded by value, normalized per instance.
    """
    out = []
    if timestamp:
        now = datetime.now(timezone.utc).isoformat(timespec="seconds")
        out.append(f"<!-- generated {now} -->")
    out.append("<!DOCTYPE html>")
    out.append('<html><head><meta charset="utf-8"><title>attribution heatmap</title>')
    out.append(f"<style>\n{_STYLE}\n</style></head><body>")
    for name, rows in sections.items():
        out.append(f"<h2>{html.escape(name)}</h2>")
        for i, (tokens, values) in enumerate(rows):
            cells = []
            for tok, val, color in zip(tokens, values, instance_colors(values)):
                title = html.escape(f"{float(val):.4g}", quote=True)
                cells.append(
                    f'<span class="tok" style="background-color:{color}" '
                    f'title="{title}">{html.escape(str(tok))}</span>'
                )
            out.append(f'<div class="row"><span class="idx">{i}</span>{"".join(cells)}</div>')
    out.append("</body></html>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# figures


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    import matplotlib.pyplot as plt

    plt.close(fig)


def plot_curves(curves: dict, path) -> None:
    """Mean comprehensiveness (deletion) and sufficiency (insertion) curves."""
    plt = _pyplot()
    grid = curves["grid"]
    fig, (ax_c, ax_s) = plt.subplots(1, 2, figsize=(9, 3.6), sharex=True)
    for name, c in curves["explainers"].items():
        ax_c.plot(grid, c["deletion"], label=name)
        ax_s.plot(grid, c["insertion"], label=name)
    ax_c.set_title("comprehensiveness (higher is better)")
    ax_s.set_title("sufficiency (lower is better)")
    for ax in (ax_c, ax_s):
        ax.set_xlabel("fraction of features l / L")
        ax.grid(alpha=0.3)
    ax_c.set_ylabel("f(x) - f(reduced x)")
    ax_s.legend(fontsize=8)
    _save(fig, path)


# Rank_Ins is left out: it mostly tracks the model's response to partial
# inputs, so its trend under rank noise says little about the explainer.
PERTURBATION_METRICS = ("comp", "suff", "delta", "df_mit", "df_frac", "rank_del")


def plot_perturbation(rows: list[dict], path, metrics=PERTURBATION_METRICS) -> None:
    """Mean metric value versus perturbation scale, one panel per metric."""
    plt = _pyplot()
    cols = min(3, len(metrics))
    nrows = -(-len(metrics) // cols)
    fig, axes = plt.subplots(nrows, cols, figsize=(3.3 * cols, 3.1 * nrows), squeeze=False)
    for ax in axes.flat[len(metrics):]:
        ax.set_visible(False)
    axes = axes.flat
    names = list(dict.fromkeys(r["explainer"] for r in rows))
    for ax, m in zip(axes, metrics):
        for name in names:
            pts = [(r["s"], r[m]) for r in rows if r["explainer"] == name and r[m] is not None]
            if pts:
                s, v = zip(*pts)
                ax.plot(s, v, marker="o", label=name)
        ax.set_title(m)
        ax.set_xlabel("noise scale s")
        ax.grid(alpha=0.3)
    axes[len(metrics) - 1].legend(fontsize=8)
    _save(fig, path)


def plot_crossings(crossings: list[dict], path, limit: int = 6) -> None:
    """Lines joining each feature's original and perturbed importance positions."""
    plt = _pyplot()
    items = crossings[:limit]
    if not items:
        return
    fig, axes = plt.subplots(1, len(items), figsize=(2.2 * len(items), 3.4), squeeze=False)
    for ax, c in zip(axes[0], items):
        before = np.asarray(c["original_ranks"])
        after = np.asarray(c["perturbed_ranks"])
        for b, a in zip(before, after):
            ax.plot([0, 1], [b, a], color="tab:red" if a != b else "0.6", lw=1.2)
        ax.set_xticks([0, 1], ["original", "perturbed"])
        ax.set_ylim(0.5, before.shape[0] + 0.5)
        ax.set_title(f"{c['explainer']} #{c['instance']} s={c['s']}", fontsize=8)
    axes[0][0].set_ylabel("rank (L = most important)")
    _save(fig, path)


def plot_beam_ablation(rows: list[dict], path) -> None:
    """Mean delta and model calls per instance versus beam size."""
    plt = _pyplot()
    B = [r["beam_size"] for r in rows]
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    ax.plot(B, [r["delta"] for r in rows], marker="o", color="tab:blue")
    ax.set_xscale("log")
    ax.set_xlabel("beam size B")
    ax.set_ylabel("mean delta", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(B, [r["model_calls"] for r in rows], marker="s", color="tab:orange")
    ax2.set_ylabel("model calls / instance", color="tab:orange")
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_gt_scores(rows: list[dict], path) -> None:
    """Ground-truth precision per explainer for each condition."""
    plt = _pyplot()
    conds = list(dict.fromkeys((r["gt_type"], r["symmetry"]) for r in rows))
    names = list(dict.fromkeys(r["explainer"] for r in rows))
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(conds), 3.4))
    width = 0.8 / max(len(names), 1)
    for j, name in enumerate(names):
        vals = []
        for cond in conds:
            hit = [r["precision"] for r in rows
                   if (r["gt_type"], r["symmetry"]) == cond and r["explainer"] == name]
            vals.append(hit[0] if hit and hit[0] is not None else np.nan)
        ax.bar(np.arange(len(conds)) + j * width, vals, width, label=name)
    ax.set_xticks(np.arange(len(conds)) + 0.4 - width / 2,
                  [f"{g}\n{s}" for g, s in conds], fontsize=7)
    ax.set_ylabel("precision")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=7)
    _save(fig, path)
