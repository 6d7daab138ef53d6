"""Numerical geometry of the pseudo-nearly Kähler SL(2,R) x SL(2,R) and its homogeneous Lagrangians."""

from . import catalog, cli_report, isometry, lag_analysis, nk_core, split_mat
from .config import TOL, Tolerances

__all__ = ["catalog", "cli_report", "isometry", "lag_analysis", "nk_core", "split_mat", "TOL", "Tolerances"]
__version__ = "0.1.0"
