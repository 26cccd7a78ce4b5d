"""Batch renderer for mrlco experiment results (CSV in, figures/tables out)."""

from .data import ReportError, ResultRow, load_results
from .plots import PlotSpec, make_table, plot_curves

__all__ = [
    "PlotSpec",
    "ReportError",
    "ResultRow",
    "load_results",
    "make_table",
    "plot_curves",
]

__version__ = "0.1.0"
