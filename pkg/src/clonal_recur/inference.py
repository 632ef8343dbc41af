"""Method-of-moments estimation of ``(mu*n**-alpha, lambda0, lambda1)``.

The three sample means of clone count, Simpson's Index and recurrence time
are inverted in closed form: ``lambda1`` first, then ``lambda0``, then the
effective per-cell mutation rate.  ``mu`` and ``alpha`` are not separately
identifiable from a single ``n``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .model import ModelParams, validate
from .simulate import StopRule, run_ensemble
from .simulate.diversity import clones_born_before, simpson_index

PARAM_NAMES = ("mu_eff", "lambda0", "lambda1")


class InadmissibleSampleError(ValueError):
    """Sample moments outside the domain of the estimators.

    Small samples can produce this; it is reported, never clamped.
    """

    def __init__(self, message: str, moments: dict, batch: Optional[int] = None):
        super().__init__(message if batch is None else f"batch {batch}: {message}")
        self.moments = moments
        self.batch = batch


@dataclass(frozen=True)
class Observation:
    clone_count: float
    simpson: float
    gamma: float

    def __post_init__(self) -> None:
        if self.clone_count < 1:
            raise ValueError(f"clone_count must be >= 1, got {self.clone_count}")
        if not 0 < self.simpson <= 1:
            raise ValueError(f"simpson must lie in (0, 1], got {self.simpson}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class EstimateTriple:
    mu_eff: float
    lambda0_hat: float
    lambda1_hat: float

    def as_array(self) -> np.ndarray:
        return np.array([self.mu_eff, self.lambda0_hat, self.lambda1_hat])


def estimate_from_moments(i_hat: float, r_hat: float, gamma_hat: float, n: float) -> EstimateTriple:
    moments = {"I": i_hat, "R": r_hat, "gamma": gamma_hat}
    disc = i_hat * i_hat - 2.0 * i_hat / r_hat
    if not disc >= 0:
        raise InadmissibleSampleError(f"I^2 - 2I/R = {disc!r} < 0", moments)
    # the minus branch is the one that inverts the moment equations
    root = i_hat - math.sqrt(disc)
    if not root > 0:
        raise InadmissibleSampleError(f"log argument n/(I - sqrt(I^2 - 2I/R)) not positive (denominator {root!r})", moments)
    lambda1 = math.log(n / root) / gamma_hat
    growth = math.exp(gamma_hat * lambda1)
    lambda0 = lambda1 / (1.0 - i_hat * growth / n)
    mu_eff = lambda1 / (growth - n / i_hat)
    return EstimateTriple(mu_eff, lambda0, lambda1)


def estimate(observations: Sequence[Observation], n: float) -> EstimateTriple:
    """Estimate from ``M >= 1`` independent recurrence observations."""
    if len(observations) == 0:
        raise ValueError("need at least one observation")
    i_hat = math.fsum(o.clone_count for o in observations) / len(observations)
    r_hat = math.fsum(o.simpson for o in observations) / len(observations)
    g_hat = math.fsum(o.gamma for o in observations) / len(observations)
    return estimate_from_moments(i_hat, r_hat, g_hat, n)


def asymptotic_moments(mu_eff: float, lambda0: float, lambda1: float, n: float) -> tuple[float, float, float]:
    """Large-``n`` approximations of E[I], E[R] and the recurrence time."""
    i_mean = -mu_eff * n / lambda0
    r_mean = 2.0 * (lambda1 - lambda0) ** 2 / (mu_eff * n * (2.0 * lambda1 - lambda0))
    gamma = math.log((lambda1 - lambda0) / mu_eff) / lambda1
    return i_mean, r_mean, gamma


def bootstrap_ci(estimates: Sequence[EstimateTriple], resamples: int = 100, level: float = 0.95,
                 seed: int = 0) -> dict:
    """Percentile bootstrap of the mean of each estimated parameter."""
    if len(estimates) == 0:
        raise ValueError("need at least one estimate")
    x = np.array([e.as_array() for e in estimates])
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(x), size=(resamples, len(x)))
    # centre on one estimate so identical inputs give an exact degenerate interval
    means = x[0] + (x[idx] - x[0]).mean(axis=1)
    q = (1.0 - level) / 2.0
    lo = np.quantile(means, q, axis=0)
    hi = np.quantile(means, 1.0 - q, axis=0)
    return {name: (float(lo[j]), float(hi[j])) for j, name in enumerate(PARAM_NAMES)}


def bootstrap_observations_ci(observations: Sequence[Observation], n: float, resamples: int = 100,
                              level: float = 0.95, seed: int = 0) -> tuple[dict, int]:
    """Percentile interval from re-estimating on resampled observations.

    Resamples whose moments are inadmissible are dropped; their number is
    returned alongside the intervals.
    """
    rng = np.random.default_rng(seed)
    obs = list(observations)
    ests, dropped = [], 0
    for _ in range(resamples):
        pick = rng.integers(0, len(obs), size=len(obs))
        try:
            ests.append(estimate([obs[i] for i in pick], n).as_array())
        except InadmissibleSampleError:
            dropped += 1
    if not ests:
        raise InadmissibleSampleError("every bootstrap resample was inadmissible", {})
    arr = np.array(ests)
    q = (1.0 - level) / 2.0
    ci = {name: (float(np.quantile(arr[:, j], q)), float(np.quantile(arr[:, j], 1.0 - q)))
          for j, name in enumerate(PARAM_NAMES)}
    return ci, dropped


@dataclass
class EstimationTable:
    truth: dict
    estimates: list
    mean: dict
    ci: dict
    bias: dict
    M: int
    n: int
    censored: int = 0
    noiseless: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["estimates"] = [asdict(e) for e in self.estimates]
        out["ci"] = {k: list(v) for k, v in self.ci.items()}
        return out

    def format(self) -> str:
        rows = [("", "mu*n^-alpha", "lambda0", "lambda1")]
        rows.append(("True value", *(f"{self.truth[k]:.6g}" for k in PARAM_NAMES)))
        rows.append(("Estimate value", *(f"{self.mean[k]:.6g}" for k in PARAM_NAMES)))
        rows.append(("Bootstrap CI", *(f"[{self.ci[k][0]:.6g}, {self.ci[k][1]:.6g}]" for k in PARAM_NAMES)))
        rows.append(("Relative bias", *(f"{self.bias[k]:+.3%}" for k in PARAM_NAMES)))
        widths = [max(len(r[j]) for r in rows) for j in range(4)]
        lines = [" | ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
        lines.insert(1, "-+-".join("-" * w for w in widths))
        lines.append(f"n={self.n}, M={self.M}, estimates={len(self.estimates)}, censored runs={self.censored}")
        return "\n".join(lines) + "\n"


def observations_from_ensemble(ensemble) -> tuple[list, int]:
    """``(I, R, gamma)`` at recurrence for each uncensored run."""
    obs, censored = [], 0
    for o in ensemble.outcomes:
        if o.recurrence_time is None:
            censored += 1
            continue
        obs.append(Observation(
            clones_born_before(o, o.recurrence_time), simpson_index(o.sizes), o.recurrence_time
        ))
    return obs, censored


def estimation_experiment(params: ModelParams, M: int, num_estimates: int, seed: int,
                          resamples: int = 100, level: float = 0.95, threads: int = 1,
                          noiseless: bool = False) -> EstimationTable:
    """Simulate ``num_estimates`` batches of ``M`` patients, estimate per batch, bootstrap.

    With ``noiseless=True`` every batch is replaced by the asymptotic moments
    themselves, which must reproduce the truth exactly.
    """
    validate(params)
    if num_estimates < 1:
        raise ValueError("num_estimates must be at least 1")
    if M < 1:
        raise ValueError("M must be at least 1")
    truth = {"mu_eff": params.mu_eff, "lambda0": params.lambda0, "lambda1": params.lambda1}
    estimates, censored = [], 0
    if noiseless:
        i_m, r_m, g_m = asymptotic_moments(params.mu_eff, params.lambda0, params.lambda1, params.n)
        obs = [Observation(i_m, r_m, g_m)] * M
        for b in range(num_estimates):
            estimates.append(estimate(obs, params.n))
    else:
        ens = run_ensemble(params, StopRule.recurrence(), M * num_estimates, seed, threads=threads)
        for b in range(num_estimates):
            batch = ens.outcomes[b * M:(b + 1) * M]
            obs, c = observations_from_ensemble(type(ens)(batch, len(batch), len(batch), seed))
            censored += c
            try:
                estimates.append(estimate(obs, params.n))
            except InadmissibleSampleError as err:
                raise InadmissibleSampleError(str(err), err.moments, batch=b) from None
    arr = np.array([e.as_array() for e in estimates])
    mean = {k: float(arr[:, j].mean()) for j, k in enumerate(PARAM_NAMES)}
    ci = bootstrap_ci(estimates, resamples, level, seed)
    bias = {k: (mean[k] - truth[k]) / abs(truth[k]) for k in PARAM_NAMES}
    return EstimationTable(truth, estimates, mean, ci, bias, M, params.n, censored, noiseless)
