from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from ..model import DiversitySummary, TrajectoryOutcome


def simpson_index(clone_sizes: Sequence[int]) -> float:
    """Probability that two cells drawn with replacement share a clone.

    Zero for an empty (or all-zero) population.
    """
    x = np.asarray(clone_sizes, dtype=np.float64)
    total = x.sum()
    if total == 0:
        return 0.0
    return float((x * x).sum() / (total * total))


def clones_born_before(outcome: TrajectoryOutcome, t: float) -> int:
    """Number of clones founded in ``(0, t]``."""
    return int(np.count_nonzero(outcome.birth_times <= t))


def diversity_summary(outcome: TrajectoryOutcome,
                      windows: Optional[Iterable[Sequence[float]]] = None) -> DiversitySummary:
    counts, mass = {}, {}
    for w in windows or ():
        t1, t2 = float(w[0]), float(w[1])
        if not t1 < t2:
            raise ValueError(f"malformed window ({t1}, {t2}): need t1 < t2")
        if t1 < 0 or t2 > outcome.stop_time:
            raise ValueError(f"window ({t1}, {t2}) outside [0, {outcome.stop_time}]")
        inside = (outcome.birth_times > t1) & (outcome.birth_times < t2)
        counts[(t1, t2)] = int(np.count_nonzero(inside))
        mass[(t1, t2)] = int(outcome.sizes[inside].sum())
    return DiversitySummary(
        num_clones_generated=outcome.num_clones,
        num_clones_alive=int(np.count_nonzero(outcome.sizes)),
        simpson=simpson_index(outcome.sizes),
        window_counts=counts,
        window_mass=mass,
    )
