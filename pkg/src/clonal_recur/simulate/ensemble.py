from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from ..model import ModelParams, TrajectoryOutcome, validate
from .core import StopRule, cached_zeta, default_horizon, simulate_one
from .diversity import simpson_index

log = logging.getLogger(__name__)

DEFAULT_MAX_ATTEMPTS = 10_000_000
CHUNK = 256


@dataclass(frozen=True)
class EarlyRecurrence:
    """Condition on recurrence strictly before ``zeta - y``."""

    y: float


@dataclass
class Ensemble:
    outcomes: list
    accepted: int
    attempted: int
    master_seed: int
    condition: Optional[EarlyRecurrence] = None
    exhausted: bool = False
    run_ids: list = field(default_factory=list)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempted if self.attempted else float("nan")

    @property
    def censored(self) -> int:
        return sum(o.censored for o in self.outcomes)

    def __len__(self) -> int:
        return len(self.outcomes)

    def __iter__(self) -> Iterator[TrajectoryOutcome]:
        return iter(self.outcomes)

    def z1(self) -> np.ndarray:
        return np.array([o.z1_final for o in self.outcomes], dtype=np.int64)

    def clone_counts(self) -> np.ndarray:
        return np.array([o.num_clones for o in self.outcomes], dtype=np.int64)

    def gammas(self) -> np.ndarray:
        return np.array(
            [np.nan if o.recurrence_time is None else o.recurrence_time for o in self.outcomes]
        )

    def simpson(self) -> np.ndarray:
        return np.array([simpson_index(o.sizes) for o in self.outcomes])


def run_ensemble(
    params: ModelParams,
    stop: StopRule,
    replicates: int,
    master_seed: int,
    condition: Optional[EarlyRecurrence] = None,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    threads: int = 1,
) -> Ensemble:
    """Independent replicates, optionally conditioned on early recurrence by rejection.

    Replicate ``i`` always uses stream ``(master_seed, i)``.  Under
    conditioning, attempts are scanned in index order and the first
    ``replicates`` accepted ones are kept, so the result does not depend on
    ``threads``.  If ``max_attempts`` runs out first, the partial ensemble
    is returned with ``exhausted=True``.
    """
    validate(params)
    if replicates < 0:
        raise ValueError("replicates must be nonnegative")
    if condition is None:
        ids = list(range(replicates))
        outcomes = _run_ids(params, stop, master_seed, ids, threads)
        return Ensemble(outcomes, replicates, replicates, master_seed, run_ids=ids)

    deadline = cached_zeta(params) - condition.y
    if not condition.y > 0 or not deadline > 0:
        raise ValueError(f"conditioning needs y > 0 and zeta - y > 0 (y={condition.y}, zeta-y={deadline})")
    sim_stop = stop
    if stop.kind == "recurrence":
        # runs not recurring before the deadline are rejected anyway
        sim_stop = StopRule.horizon(min(stop.t or default_horizon(params), deadline))

    kept, ids = [], []
    attempted = 0
    next_id = 0
    batch = max(CHUNK, CHUNK * max(threads, 1))
    while len(kept) < replicates and next_id < max_attempts:
        chunk_ids = list(range(next_id, min(next_id + batch, max_attempts)))
        next_id = chunk_ids[-1] + 1
        for i, out in zip(chunk_ids, _run_ids(params, sim_stop, master_seed, chunk_ids, threads)):
            attempted = i + 1
            if out.recurrence_time is not None and out.recurrence_time < deadline:
                kept.append(out)
                ids.append(i)
                if len(kept) == replicates:
                    break
    exhausted = len(kept) < replicates
    if exhausted:
        attempted = next_id
        log.warning("attempt budget %d exhausted with %d/%d accepted", max_attempts, len(kept), replicates)
    return Ensemble(kept, len(kept), attempted, master_seed, condition, exhausted, ids)


def _run_ids(params, stop, master_seed, ids, threads):
    if threads <= 1 or len(ids) < 2:
        return [simulate_one(params, stop, (master_seed, i)) for i in ids]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: simulate_one(params, stop, (master_seed, i)), ids))
