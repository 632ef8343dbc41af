"""Exact stochastic simulation of sensitive/resistant populations.

The event loop lives in a compiled extension (``_ckernel``) with a
pure-Python twin (``_pykernel``) used when the extension is not built;
see :mod:`clonal_recur.simulate.kernel`.
"""

from .core import (
    SimulationError,
    StopRule,
    default_horizon,
    simulate_clone,
    simulate_one,
    stream,
    yule_size_at,
    yule_sizes,
)
from .diversity import clones_born_before, diversity_summary, simpson_index
from .ensemble import EarlyRecurrence, Ensemble, run_ensemble
from .io import read_runs_csv, write_clones_csv, write_runs_csv
from .kernel import BACKEND

__all__ = [
    "BACKEND", "EarlyRecurrence", "Ensemble", "SimulationError", "StopRule", "clones_born_before",
    "default_horizon", "diversity_summary", "read_runs_csv", "run_ensemble", "simpson_index",
    "simulate_clone", "simulate_one", "stream", "write_clones_csv", "write_runs_csv",
    "yule_size_at", "yule_sizes",
]
