"""Clonal diversity at cancer recurrence in a two-type branching model."""

from .model import (
    CloneRecord,
    DiversitySummary,
    ModelParams,
    ParameterError,
    SensitiveMode,
    TrajectoryOutcome,
    load_params,
    mutation_intensity,
    validate,
)

__version__ = "0.1.0"

#: Birth-death clones and a stochastic sensitive pool (the ``fig1`` preset).
FIG1_PARAMS = ModelParams(r0=1.0, d0=1.2, r1=1.0, d1=0.8, mu=0.5, alpha=0.6, n=1000, a=1.0,
                          sensitive_mode=SensitiveMode.STOCHASTIC)
#: Base model with pure-birth clones (lambda1 = 0.2), as used for the Simpson
#: limits and the estimation table.
BASE_PARAMS = ModelParams(r0=1.0, d0=1.2, r1=0.2, d1=0.0, mu=0.5, alpha=0.6, n=1000, a=1.0,
                          sensitive_mode=SensitiveMode.DETERMINISTIC)

__all__ = [
    "BASE_PARAMS", "CloneRecord", "DiversitySummary", "FIG1_PARAMS", "ModelParams", "ParameterError",
    "SensitiveMode", "TrajectoryOutcome", "__version__", "load_params", "mutation_intensity", "validate",
]
