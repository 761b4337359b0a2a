"""Truncated path signatures and shortest-path recovery from a signature."""
from .tensor import TruncatedTensor, exp, exp_vector, log, unit
from .signature import ControlPath, PiecewisePath, flow, signature_of_path
from .pmp import SolverParams, solve
from .vartime import TimeSearchParams, search_final_time

__version__ = "0.1.0"

__all__ = [
    "ControlPath", "PiecewisePath", "SolverParams", "TimeSearchParams", "TruncatedTensor",
    "exp", "exp_vector", "flow", "log", "search_final_time", "signature_of_path", "solve", "unit",
]
