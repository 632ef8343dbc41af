"""Domain types for the sensitive/resistant two-type branching model.

Every other module works from a validated :class:`ModelParams`.  The net
growth rates ``lambda0 = r0 - d0`` and ``lambda1 = r1 - d1`` are computed
once on construction and used everywhere else, never recomputed inline.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np


class SensitiveMode(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


class ParameterError(ValueError):
    """A model parameter violates one of the standing assumptions.

    ``constraint`` is a short machine-readable name of the violated rule
    (``"lambda0<0"``, ``"alpha in (0,1)"``, ...).
    """

    def __init__(self, constraint: str, message: str):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


@dataclass(frozen=True)
class ModelParams:
    r0: float
    d0: float
    r1: float
    d1: float
    mu: float
    alpha: float
    n: int
    a: float = 1.0
    sensitive_mode: SensitiveMode = SensitiveMode.DETERMINISTIC
    lambda0: float = field(init=False, repr=False)
    lambda1: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sensitive_mode", SensitiveMode(self.sensitive_mode))
        object.__setattr__(self, "lambda0", float(self.r0) - float(self.d0))
        object.__setattr__(self, "lambda1", float(self.r1) - float(self.d1))

    @property
    def mu_eff(self) -> float:
        """Per-cell mutation rate ``mu * n**-alpha``."""
        return self.mu * self.n ** (-self.alpha)

    @property
    def scale(self) -> float:
        """``n**(1 - alpha)``, the scale of clone counts."""
        return self.n ** (1.0 - self.alpha)

    @property
    def threshold(self) -> float:
        return self.a * self.n

    @property
    def deterministic(self) -> bool:
        return self.sensitive_mode is SensitiveMode.DETERMINISTIC

    def replace(self, **changes: Any) -> "ModelParams":
        values = self.to_dict()
        values.update(changes)
        return ModelParams(**values)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.init}
        out["sensitive_mode"] = self.sensitive_mode.value
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelParams":
        allowed = [f.name for f in fields(cls) if f.init]
        unknown = sorted(set(data) - set(allowed))
        if unknown:
            raise ParameterError("unknown-keys", f"unknown parameter field(s): {', '.join(unknown)}")
        required = [f.name for f in fields(cls) if f.init and f.name not in ("a", "sensitive_mode")]
        missing = [k for k in required if k not in data]
        if missing:
            raise ParameterError("missing-keys", f"missing parameter field(s): {', '.join(missing)}")
        values = dict(data)
        if not isinstance(values["n"], int) or isinstance(values["n"], bool):
            if isinstance(values["n"], float) and values["n"].is_integer():
                values["n"] = int(values["n"])
            else:
                raise ParameterError("n>=1", f"n must be a positive integer, got {values['n']!r}")
        try:
            values["sensitive_mode"] = SensitiveMode(values.get("sensitive_mode", "deterministic"))
        except ValueError:
            raise ParameterError(
                "sensitive_mode",
                f"sensitive_mode must be 'deterministic' or 'stochastic', got {values['sensitive_mode']!r}",
            ) from None
        return cls(**values)


def load_params(source: str | Path | Mapping[str, Any]) -> ModelParams:
    """Load and validate parameters from a JSON file path or a mapping."""
    if isinstance(source, Mapping):
        data = source
    else:
        data = json.loads(Path(source).read_text())
    return validate(ModelParams.from_dict(data))


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged if all standing assumptions hold."""
    p = params
    for name in ("r0", "d0", "r1", "d1", "mu", "alpha", "a"):
        if not math.isfinite(getattr(p, name)):
            raise ParameterError(f"{name} finite", f"{name} must be finite, got {getattr(p, name)!r}")
    for name in ("r0", "d0", "d1"):
        if getattr(p, name) < 0:
            raise ParameterError(f"{name}>=0", f"{name} must be nonnegative, got {getattr(p, name)}")
    if p.r1 <= 0:
        raise ParameterError("r1>0", f"resistant birth rate must be positive, got {p.r1}")
    if p.lambda0 >= 0:
        raise ParameterError(
            "lambda0<0", f"sensitive cells must decay under therapy: r0 - d0 = {p.lambda0} >= 0"
        )
    if p.lambda1 <= 0:
        raise ParameterError(
            "lambda1>0", f"resistant clones must be supercritical: r1 - d1 = {p.lambda1} <= 0"
        )
    if not 0.0 < p.alpha < 1.0:
        raise ParameterError("alpha in (0,1)", f"alpha must lie strictly inside (0, 1), got {p.alpha}")
    if p.mu <= 0:
        raise ParameterError("mu>0", f"mu must be positive, got {p.mu}")
    if p.n < 1:
        raise ParameterError("n>=1", f"n must be a positive integer, got {p.n}")
    if p.a <= 0:
        raise ParameterError("a>0", f"threshold fraction a must be positive, got {p.a}")
    return params


def mutation_intensity(params: ModelParams, t: float, z0: Optional[float] = None) -> float:
    """Rate at which new resistant clones are founded at time ``t``.

    In deterministic mode ``z0`` defaults to ``n * exp(lambda0 * t)``; in
    stochastic mode the current sensitive count must be supplied.
    """
    if z0 is None:
        if not params.deterministic:
            raise ValueError("stochastic mode needs the current sensitive count z0")
        z0 = params.n * math.exp(params.lambda0 * t)
    return z0 * params.mu_eff


@dataclass(frozen=True)
class CloneRecord:
    id: int
    birth_time: float
    size: int


@dataclass
class TrajectoryOutcome:
    """One simulated run, frozen at ``stop_time``.

    Clone data is kept columnar (``birth_times``, ``sizes``) since runs can
    carry hundreds of clones; ``clone_records`` builds the record view.
    """

    recurrence_time: Optional[float]
    stop_time: float
    birth_times: np.ndarray
    sizes: np.ndarray
    z0_final: float
    seed: tuple[int, int]
    censored: bool = False
    extinct: bool = False
    counters: dict = field(default_factory=dict)

    @property
    def z1_final(self) -> int:
        return int(self.sizes.sum())

    @property
    def clone_records(self) -> list[CloneRecord]:
        return [
            CloneRecord(i, float(b), int(s))
            for i, (b, s) in enumerate(zip(self.birth_times, self.sizes))
        ]

    @property
    def num_clones(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class DiversitySummary:
    num_clones_generated: int
    num_clones_alive: int
    simpson: float
    window_counts: dict = field(default_factory=dict)
    window_mass: dict = field(default_factory=dict)
