"""Standalone SVG line plots of training logs."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import EmptyInput, ValidationError  # noqa: E402

KINDS = ("figure1", "figure2", "figure3", "epochs")
_RC = {"svg.fonttype": "none", "svg.hashsalt": "hybridlip", "path.simplify": False}


def _runs(rows):
    """Split a concatenated log at each epoch-0 row."""
    runs = []
    for r in rows:
        if r["epoch"] == 0 or not runs:
            runs.append([])
        runs[-1].append(r)
    return runs


def _line(ax, x, y, label, **kw):
    marker = "o" if len(x) == 1 else None
    (line,) = ax.plot(x, y, label=label, marker=marker, **kw)
    line.set_gid(f"series-{label}")
    return line


def series(rows, kind: str) -> list:
    """``(label, x, y, axis)`` tuples that a plot of ``kind`` draws."""
    out = []
    runs = _runs(rows)
    if kind == "figure2":
        by_norm = {}
        for run in runs:
            last = run[-1]
            by_norm.setdefault(last["norm"], []).append((last["lambda"], last["lip_hybrid"]))
        for norm, pts in by_norm.items():
            pts.sort()
            out.append((f"lip_hybrid ({norm})", [p[0] for p in pts], [p[1] for p in pts], 0))
        return out
    for run in runs:
        x = [r["epoch"] for r in run]
        if kind == "figure1":
            out.append((run[0]["norm"], x, [r["lip_hybrid"] for r in run], 0))
        elif kind == "figure3":
            m = run[0]["method"]
            out.append((f"{m} test_acc", x, [r["test_acc"] for r in run], 0))
            out.append((f"{m} lip_hybrid", x, [r["lip_hybrid"] for r in run], 1))
        else:
            label = f"{run[0]['method']} {run[0]['norm']} lambda={run[0]['lambda']:g}"
            out.append((label, x, [r["lip_hybrid"] for r in run], 0))
    return out


def render_svg(rows, kind: str = "epochs", title: str | None = None) -> str:
    if not rows:
        raise EmptyInput("cannot plot an empty metrics log")
    if kind not in KINDS:
        raise ValidationError(f"unknown plot kind {kind!r}; expected one of {KINDS}")
    with plt.rc_context(_RC):
        n_axes = 2 if kind == "figure3" else 1
        fig, axes = plt.subplots(1, n_axes, figsize=(6 * n_axes, 4), squeeze=False)
        axes = axes[0]
        for label, x, y, i in series(rows, kind):
            _line(axes[i], x, y, label)
        if kind == "figure2":
            axes[0].set_xscale("symlog", linthresh=1e-2)
            axes[0].set_xlabel("regularization weight lambda")
            axes[0].set_ylabel("certified Lipschitz bound")
        elif kind == "figure3":
            axes[0].set_xlabel("epoch")
            axes[0].set_ylabel("test accuracy")
            axes[1].set_xlabel("epoch")
            axes[1].set_ylabel("certified Lipschitz bound")
        else:
            axes[0].set_xlabel("epoch")
            axes[0].set_ylabel("certified Lipschitz bound")
        for ax in axes:
            ax.legend()
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def emit_plot(log, kind: str, path=None) -> str:
    """Write an SVG line plot of ``log`` (a MetricsLog or row list) and return its text."""
    rows = log.rows if hasattr(log, "rows") else list(log)
    svg = render_svg(rows, kind)
    if path is not None:
        with open(path, "w") as f:
            f.write(svg)
    return svg
