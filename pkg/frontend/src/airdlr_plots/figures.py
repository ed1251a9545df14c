"""Render experiment CSV files into the standard figure set.

Each figure id names a fixed CSV schema produced by the experiment
driver; rendering is a pure function of the CSV content (pinned style,
salted SVG ids, no clock or locale dependence), so identical inputs give
identical files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


class SchemaError(ValueError):
    """The input CSV does not match the figure's documented schema."""


# figure id -> columns the renderer reads
FIGURES = {
    "fig2": ("scenario", "K", "method", "mse_mean", "mse_lb_mean"),
    "fig3": ("device", "channel_gain", "dlr_value"),
    "fig4": ("K", "r_min", "r_max", "mse_mean"),
    "fig5": ("iteration", "mse", "method"),
    "fig6": ("method", "round", "loss", "acc"),
    "fig7": ("scenario", "K", "antennas", "mse_over_sigma2",
             "theory_over_sigma2"),
}

_STYLE = {
    "svg.hashsalt": "airdlr-plots",
    "svg.fonttype": "none",
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
}


@dataclass
class FigureSpec:
    figure: str
    inputs: list
    output: str
    log_y: bool = True
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise SchemaError(
                f"unknown figure id {self.figure!r}; expected one of "
                + ", ".join(sorted(FIGURES))
            )
        if isinstance(self.inputs, str):
            self.inputs = [self.inputs]
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def _read_rows(path, required):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty CSV (no header row)")
        for column in required:
            if column not in reader.fieldnames:
                raise SchemaError(f"{path}: missing required column {column!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _series(rows, key_cols, x_col, y_col):
    """Group rows into {key: (xs, ys)} with x-sorted float values."""
    grouped: dict = {}
    for row in rows:
        key = tuple(row[c] for c in key_cols)
        grouped.setdefault(key, []).append(
            (float(row[x_col]), float(row[y_col]))
        )
    out = {}
    for key, points in grouped.items():
        points.sort()
        out[key] = ([p[0] for p in points], [p[1] for p in points])
    return out


def _label(spec, key, default):
    return spec.labels.get(key, default)


def _render_fig2(spec, ax):
    rows = _read_rows(spec.inputs[0], FIGURES["fig2"])
    for key, (xs, ys) in sorted(_series(
            rows, ("scenario", "method"), "K", "mse_mean").items()):
        scenario, method = key
        name = "NDLR" if method == "fixed" else method.upper()
        ax.plot(xs, ys, marker="o", markersize=3,
                label=_label(spec, f"{scenario}-{method}",
                             f"{scenario} {name}"))
    # analysis overlay: the mean lower bound of the best-covered scenario
    bounds = _series(rows, ("scenario",), "K", "mse_lb_mean")
    for (scenario,), (xs, ys) in sorted(bounds.items()):
        ax.plot(xs, ys, linestyle="--", color="black", linewidth=0.9,
                label=_label(spec, f"{scenario}-analysis",
                             f"{scenario} Analysis"))
    ax.set_xlabel("Number of devices K")
    ax.set_ylabel(r"MSE / $\sigma^2$")


def _render_fig3(spec, ax):
    rows = _read_rows(spec.inputs[0], FIGURES["fig3"])
    gains = [float(r["channel_gain"]) for r in rows]
    ratios = [float(r["dlr_value"]) for r in rows]
    idx = range(1, len(rows) + 1)
    ax.bar([i - 0.2 for i in idx], gains, width=0.4, color="tab:blue",
           label=_label(spec, "gain", "Equivalent channel power"))
    ax.set_xlabel("Device (sorted by channel power)")
    ax.set_ylabel("Equivalent channel power")
    twin = ax.twinx()
    twin.bar([i + 0.2 for i in idx], ratios, width=0.4, color="tab:orange",
             label=_label(spec, "dlr", "DLR ratio"))
    twin.set_ylabel("DLR ratio")
    twin.grid(False)
    spec.log_y = False


def _render_fig4(spec, ax):
    rows = _read_rows(spec.inputs[0], FIGURES["fig4"])
    for key, (xs, ys) in sorted(_series(
            rows, ("r_min", "r_max"), "K", "mse_mean").items()):
        r_min, r_max = key
        ax.plot(xs, ys, marker="s", markersize=3,
                label=_label(spec, f"{r_min}-{r_max}",
                             f"$r_{{min}}$={float(r_min):g}, "
                             f"$r_{{max}}$={float(r_max):g}"))
    ax.set_xlabel("Number of devices K")
    ax.set_ylabel(r"MSE / $\sigma^2$")


def _render_fig5(spec, ax):
    rows = _read_rows(spec.inputs[0], FIGURES["fig5"])
    for (method,), (xs, ys) in sorted(_series(
            rows, ("method",), "iteration", "mse").items()):
        ax.plot(xs, ys, marker="o", markersize=3,
                label=_label(spec, method, method))
    ax.set_xlabel("Iteration")
    ax.set_ylabel(r"MSE / $\sigma^2$")


def _render_fig6(spec, ax):
    rows = _read_rows(spec.inputs[0], FIGURES["fig6"])
    for (method,), (xs, ys) in sorted(_series(
            rows, ("method",), "round", "loss").items()):
        ax.plot(xs, ys, label=_label(spec, f"{method}-loss",
                                     f"{method} loss"))
    ax.set_xlabel("Round")
    ax.set_ylabel("Training loss")
    twin = ax.twinx()
    for (method,), (xs, ys) in sorted(_series(
            rows, ("method",), "round", "acc").items()):
        twin.plot(xs, ys, linestyle="--",
                  label=_label(spec, f"{method}-acc", f"{method} accuracy"))
    twin.set_ylabel("Test accuracy")
    twin.grid(False)
    spec.log_y = False


def _render_fig7(spec, ax):
    rows = _read_rows(spec.inputs[0], FIGURES["fig7"])
    solved = _series(rows, ("scenario", "K"), "antennas", "mse_over_sigma2")
    for key, (xs, ys) in sorted(solved.items()):
        scenario, k = key
        ax.plot(xs, ys, marker="o", markersize=3,
                label=_label(spec, f"{scenario}-{k}", f"{scenario} K={k}"))
    theory = _series(rows, ("scenario", "K"), "antennas", "theory_over_sigma2")
    for key, (xs, ys) in sorted(theory.items()):
        scenario, k = key
        ax.plot(xs, ys, linestyle="--", color="black", linewidth=0.9,
                label=_label(spec, f"{scenario}-{k}-analysis",
                             f"{scenario} K={k} Analysis"))
    ax.set_xlabel("Number of antennas")
    ax.set_ylabel(r"MSE / $\sigma^2$")


_RENDERERS = {
    "fig2": _render_fig2,
    "fig3": _render_fig3,
    "fig4": _render_fig4,
    "fig5": _render_fig5,
    "fig6": _render_fig6,
    "fig7": _render_fig7,
}


def render(spec: FigureSpec) -> str:
    """Render the figure to `spec.output` and return the path."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            _RENDERERS[spec.figure](spec, ax)
            if spec.log_y:
                ax.set_yscale("log")
            handles, labels = ax.get_legend_handles_labels()
            if labels:
                ax.legend(fontsize=8)
            fig.tight_layout()
            fig.savefig(spec.output, metadata=_no_date_metadata(spec.output))
        finally:
            plt.close(fig)
    return spec.output


def _no_date_metadata(path):
    if str(path).endswith(".svg"):
        return {"Date": None}
    if str(path).endswith(".png"):
        return {"Software": None}
    return None
