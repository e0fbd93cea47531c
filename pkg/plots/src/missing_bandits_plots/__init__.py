"""Plotting companion for the bandit simulation results format.

Reads the runner's long-form CSV files and renders mean regret curves
with standard-deviation bands. The package never imports the simulator;
the CSV schema is the only coupling.
"""

from .figures import FIGURES, PlotSpec, plot_regret, regenerate_figures
from .schema import CSV_HEADER, ResultTable, SchemaError, read_results_csv

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "FIGURES",
    "PlotSpec",
    "ResultTable",
    "SchemaError",
    "plot_regret",
    "read_results_csv",
    "regenerate_figures",
]
