from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .. import analytics
from ..model import ModelParams, TrajectoryOutcome, validate
from . import kernel as _kernel

SeedLike = Union[int, tuple[int, int]]

#: Hard cap on events per run; hitting it raises instead of hanging.
MAX_EVENTS = 2_000_000_000


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class StopRule:
    """When a run stops.

    ``recurrence``: at the recurrence time, or at ``t`` (the censoring
    horizon, default ``zeta + 10/lambda1``) if that comes first.
    ``fixed``: at time ``t``; the recurrence time is still recorded en route.
    ``horizon``: like ``recurrence`` with an explicit horizon ``t``.
    """

    kind: str
    t: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in ("recurrence", "fixed", "horizon"):
            raise ValueError(f"unknown stop rule {self.kind!r}")
        if self.kind in ("fixed", "horizon") and self.t is None:
            raise ValueError(f"stop rule {self.kind!r} needs a time")
        if self.t is not None and not self.t > 0:
            raise ValueError(f"stop time must be positive, got {self.t}")

    @classmethod
    def recurrence(cls, horizon: Optional[float] = None) -> "StopRule":
        return cls("recurrence", horizon)

    @classmethod
    def fixed(cls, t: float) -> "StopRule":
        return cls("fixed", t)

    @classmethod
    def horizon(cls, t_max: float) -> "StopRule":
        return cls("horizon", t_max)

    @property
    def stops_at_recurrence(self) -> bool:
        return self.kind != "fixed"


@functools.lru_cache(maxsize=256)
def cached_zeta(params: ModelParams) -> float:
    return analytics.zeta(params)


def default_horizon(params: ModelParams) -> float:
    return cached_zeta(params) + 10.0 / params.lambda1


def stream(seed: SeedLike) -> np.random.Philox:
    """Counter-based bit generator for replicate ``(master_seed, index)``."""
    master, index = (seed, 0) if isinstance(seed, (int, np.integer)) else seed
    return np.random.Philox(np.random.SeedSequence(int(master), spawn_key=(int(index),)))


def _seed_pair(seed: SeedLike) -> tuple[int, int]:
    if isinstance(seed, (int, np.integer)):
        return int(seed), 0
    return int(seed[0]), int(seed[1])


def simulate_one(params: ModelParams, stop: StopRule, seed: SeedLike) -> TrajectoryOutcome:
    """Exact event-driven simulation of one trajectory."""
    validate(params)
    if stop.kind == "recurrence" and stop.t is None:
        t_stop = default_horizon(params)
    else:
        t_stop = float(stop.t)
    gamma, t_end, z0, births, sizes, counters, status = _kernel.run_kernel(
        stream(seed),
        not params.deterministic,
        float(params.r0), float(params.d0), params.mu_eff,
        float(params.r1), float(params.d1), params.lambda0,
        float(params.n), params.threshold, t_stop,
        stop.stops_at_recurrence, 0, MAX_EVENTS,
    )
    if status == _kernel.EVENT_CAP:
        raise SimulationError(f"event cap of {MAX_EVENTS} reached (seed {seed!r})")
    recurrence = None if math.isnan(gamma) else gamma
    extinct = status == _kernel.EXTINCT
    if stop.kind == "fixed":
        t_end = t_stop
        if extinct and params.deterministic:
            z0 = params.n * math.exp(params.lambda0 * t_stop)
    return TrajectoryOutcome(
        recurrence_time=recurrence,
        stop_time=t_end,
        birth_times=births,
        sizes=sizes,
        z0_final=z0,
        seed=_seed_pair(seed),
        censored=recurrence is None,
        extinct=extinct,
        counters=dict(zip(
            ("sensitive_births", "sensitive_deaths", "mutations", "resistant_births", "resistant_deaths"),
            (int(c) for c in counters),
        )),
    )


def simulate_clone(r1: float, d1: float, t: float, seed: SeedLike) -> int:
    """Size at time ``t`` of one birth-death clone started from a single cell."""
    _, _, _, _, sizes, _, status = _kernel.run_kernel(
        stream(seed), True, 0.0, 0.0, 0.0, float(r1), float(d1), -1.0, 0.0,
        math.inf, float(t), False, 1, MAX_EVENTS,
    )
    if status == _kernel.EVENT_CAP:
        raise SimulationError("event cap reached")
    return int(sizes[0])


def yule_size_at(lambda1: float, dt: float, seed: SeedLike) -> int:
    """One draw of a pure-birth clone's size after ``dt`` (geometric on 1, 2, ...)."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    rng = np.random.Generator(stream(seed))
    return int(rng.geometric(math.exp(-lambda1 * dt)))


def yule_sizes(lambda1: float, dt: float, size: int, seed: SeedLike) -> np.ndarray:
    """Vectorized :func:`yule_size_at` for bulk sampling."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    rng = np.random.Generator(stream(seed))
    return rng.geometric(math.exp(-lambda1 * dt), size=size)
