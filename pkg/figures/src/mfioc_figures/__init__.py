"""Figures for the inverse-LQR solver's CSV/JSON outputs."""

from .plots import plot_convergence, plot_montecarlo, plot_overlay
from .schemas import SchemaError

__version__ = "0.1.0"
