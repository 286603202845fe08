"""Rate, distortion and leakage tradeoffs for single-server lossy weakly-private retrieval."""

__version__ = "0.1.0"

from .ratedist import RateDistortionCurve, TradeoffCurve, eval_rd, pwl_approximate, uniform_grid
from .source_coding import ResponseFunction, ml_reconstruct
from .lp_core import QueryDistribution, build_and_solve_lp, leakage, tradeoff_sweep
from .schemes import Scheme, evaluate, simulate

__all__ = [
    "RateDistortionCurve", "TradeoffCurve", "eval_rd", "pwl_approximate", "uniform_grid",
    "ResponseFunction", "ml_reconstruct", "QueryDistribution", "build_and_solve_lp",
    "leakage", "tradeoff_sweep", "Scheme", "evaluate", "simulate",
]
