"""Regret-curve figures from results CSVs.

plot_regret renders one figure from a declarative spec and reports back
exactly what it drew, so callers can verify the plotted series against
the data. regenerate_figures runs the standard set over a results
directory.
"""

import os
from dataclasses import dataclass
from typing import Dict, List, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError, read_results_csv

FIG_SIZE = (7.0, 4.5)
DPI = 120


@dataclass
class PlotSpec:
    """One figure: which files, which policies, how to label and scale."""

    inputs: List[str]
    # (csv basename, policy name) -> legend label, in draw order
    labels: Dict[Tuple[str, str], str]
    title: str = ""
    y_scale: str = "linear"  # or "log": values are offset by +1 before log
    out_base: str = "figure"  # extensionless; .png and .svg are appended

    def __post_init__(self):
        if self.y_scale not in ("linear", "log"):
            raise ValueError("y_scale must be 'linear' or 'log'")


def plot_regret(spec: PlotSpec) -> Dict[str, object]:
    """Render one figure; returns output paths and the plotted series.

    Each labeled (file, policy) pair becomes one line at the
    cross-replication mean with a +/- one standard deviation band.
    Inputs are read-only; the same spec draws identical series and
    identical image dimensions.
    """
    tables = {}
    for path in spec.inputs:
        tables[os.path.basename(path)] = read_results_csv(path)
    for (csv_name, policy) in spec.labels:
        if csv_name not in tables:
            raise SchemaError(f"label references unknown input file {csv_name!r}")
        if policy not in tables[csv_name].curves:
            raise SchemaError(
                f"{csv_name}: column policy has no rows for {policy!r}"
            )

    fig, ax = plt.subplots(figsize=FIG_SIZE, dpi=DPI)
    series: Dict[Tuple[str, str], Dict[str, np.ndarray]] = {}
    offset = 1.0 if spec.y_scale == "log" else 0.0
    for (csv_name, policy), label in spec.labels.items():
        table = tables[csv_name]
        t = np.array(table.times, dtype=float)
        mean = table.mean(policy)
        std = table.std(policy)
        ax.plot(t, mean + offset, label=label)
        ax.fill_between(t, mean - std + offset, mean + std + offset, alpha=0.25)
        series[(csv_name, policy)] = {"times": t, "mean": mean, "std": std}
    if spec.y_scale == "log":
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("cumulative regret" + (" + 1" if offset else ""))
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.tight_layout()

    paths = []
    for ext in ("png", "svg"):
        out = f"{spec.out_base}.{ext}"
        fig.savefig(out)
        paths.append(out)
    width, height = fig.canvas.get_width_height()
    plt.close(fig)
    return {"paths": paths, "series": series, "size_px": (width, height)}


# The standard figure set over an acceptance results directory. Values are
# (input basenames, labels, title); every figure is linear, and the MNAR
# comparison is additionally rendered on a log axis.
FIGURES: Dict[str, Tuple[List[str], Dict[Tuple[str, str], str], str]] = {
    "mcar-observation-sweep": (
        ["mcar-gamma-0.5.csv", "mcar-gamma-0.7.csv", "mcar-gamma-0.9.csv"],
        {
            ("mcar-gamma-0.5.csv", "McarUcb"): "half observed",
            ("mcar-gamma-0.7.csv", "McarUcb"): "70% observed",
            ("mcar-gamma-0.9.csv", "McarUcb"): "90% observed",
        },
        "Reward-agnostic missingness: regret vs observation rate",
    ),
    "mar-known-vs-estimated": (
        ["mar-known-vs-unknown.csv"],
        {
            ("mar-known-vs-unknown.csv", "MarUcbKnownP"): "known frequencies",
            ("mar-known-vs-unknown.csv", "MarUcbUnknownP"): "estimated frequencies",
        },
        "Mediator-weighted UCB: known vs estimated frequencies",
    ),
    "mar-mediator-profile": (
        ["mar-uniform.csv", "mar-peaked.csv"],
        {
            ("mar-uniform.csv", "MarUcbUnknownP"): "uniform mediators",
            ("mar-peaked.csv", "MarUcbUnknownP"): "peaked mediators",
        },
        "Mediator concentration and regret",
    ),
    "ignoremed-naive-vs-corrected": (
        ["ignoremed-naive-vs-corrected.csv"],
        {
            ("ignoremed-naive-vs-corrected.csv", "NaiveUcb"): "drop missing rewards",
            ("ignoremed-naive-vs-corrected.csv", "MarUcbUnknownP"): "mediator-weighted",
        },
        "The cost of ignoring the mediator",
    ),
    "mnar-correction": (
        ["mnar-showcase.csv"],
        {
            ("mnar-showcase.csv", "NaiveUcb"): "drop missing rewards",
            ("mnar-showcase.csv", "MnarUcb"): "odds-ratio corrected",
        },
        "Outcome-dependent missingness: corrected vs naive",
    ),
}


def figure_specs(csv_dir, out_dir) -> Dict[str, PlotSpec]:
    """Concrete specs for the standard set: the five base figures plus the
    MNAR comparison repeated with a log y-axis ("mnar-correction-log")."""
    specs = {}
    for name, (basenames, labels, title) in FIGURES.items():
        specs[name] = PlotSpec(
            inputs=[os.path.join(csv_dir, b) for b in basenames],
            labels=labels,
            title=title,
            out_base=os.path.join(out_dir, name),
        )
    basenames, labels, title = FIGURES["mnar-correction"]
    specs["mnar-correction-log"] = PlotSpec(
        inputs=[os.path.join(csv_dir, b) for b in basenames],
        labels=labels,
        title=title,
        y_scale="log",
        out_base=os.path.join(out_dir, "mnar-correction-log"),
    )
    return specs


def regenerate_figures(csv_dir, out_dir, only=None) -> Dict[str, Dict[str, object]]:
    """Render the standard figures from csv_dir into out_dir.

    Returns {figure name: plot_regret result}. only, when given, restricts
    rendering to those figure names.
    """
    os.makedirs(out_dir, exist_ok=True)
    specs = figure_specs(csv_dir, out_dir)
    if only is not None:
        unknown = [n for n in only if n not in specs]
        if unknown:
            raise SchemaError(
                f"unknown figure {unknown[0]!r}; available: {', '.join(specs)}"
            )
        specs = {n: specs[n] for n in specs if n in only}
    return {name: plot_regret(spec) for name, spec in specs.items()}
