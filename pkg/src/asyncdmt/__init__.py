"""Diversity-multiplexing tradeoff tools for asynchronous two-hop relay networks."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .dmt_closed_form import KappaPolicy, dmt_curve, fixed_curve, optimal_curve
from .exponent_oracle import assemble_outage_exponent, regress_slope, solve_inf

__all__ = [
    "KappaPolicy",
    "assemble_outage_exponent",
    "dmt_curve",
    "fixed_curve",
    "optimal_curve",
    "regress_slope",
    "solve_inf",
]
