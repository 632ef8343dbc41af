"""Closed-form limits and large-deviation quantities of the recurrence model.

All improper integrals are written with decaying exponentials only (so the
integrands stay finite for large ``s``) and evaluated by
:func:`numerics.integrate_0_inf` with substitution rate
``min(lambda1, -lambda0)``, which keeps every transformed integrand bounded.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import ModelParams, ParameterError, validate
from .numerics import (
    DEFAULT_TOL,
    BracketError,
    ConvergenceError,
    NumericalError,
    Tolerances,
    find_root_monotone,
    integrate,
    integrate_0_inf,
    maximize_1d,
)

#: Maximizer of the rate objective must agree with theta_star to this.
FOC_TOL = 1e-6


def _rates(params: ModelParams) -> tuple[float, float, float]:
    validate(params)
    return params.lambda0, params.lambda1, params.mu


def _sub_rate(l0: float, l1: float) -> float:
    return min(l1, -l0)


def z1_mean(params: ModelParams, t: float) -> float:
    """Expected resistant population at time ``t``."""
    l0, l1, mu = _rates(params)
    if t < 0:
        raise ValueError("t must be nonnegative")
    return mu / (l1 - l0) * params.scale * math.exp(l1 * t) * (-math.expm1((l0 - l1) * t))


def zeta(params: ModelParams, tol: Tolerances = DEFAULT_TOL, max_doublings: int = 60) -> float:
    """Deterministic recurrence time: the root of ``z1_mean(t) = a*n``."""
    _rates(params)
    target = params.threshold
    hi = 1.0
    for _ in range(max_doublings):
        if z1_mean(params, hi) > target:
            break
        hi *= 2.0
    else:
        raise BracketError(f"z1_mean never reaches a*n={target} below t={hi}")
    # relative scaling keeps the bracket test meaningful for large a*n
    return find_root_monotone(lambda t: z1_mean(params, t) / target - 1.0, 0.0, hi, tol).x


def poisson_mean(params: ModelParams, tol: Tolerances = DEFAULT_TOL) -> float:
    """Mean number of clones founded by ``zeta`` (deterministic sensitive pool)."""
    l0, _, mu = _rates(params)
    return -(mu * params.scale / l0) * (-math.expm1(l0 * zeta(params, tol)))


def poisson_clone_pmf(params: ModelParams, k: int, tol: Tolerances = DEFAULT_TOL,
                      mean: Optional[float] = None) -> float:
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    lam = poisson_mean(params, tol) if mean is None else mean
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))


def _eq2_integral(l0: float, l1: float, theta: float, tol: Tolerances) -> float:
    # int e^{l1 s} e^{l0 s} / (e^{l1 s} - theta)^2 ds
    return integrate_0_inf(
        lambda s: np.exp((l0 - l1) * s) / (1.0 - theta * np.exp(-l1 * s)) ** 2,
        _sub_rate(l0, l1), tol,
    )


def theta_star(params: ModelParams, y: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Tilt parameter solving the first-order condition of the rate objective."""
    l0, l1, _ = _rates(params)
    if y < 0:
        raise ValueError(f"y must be nonnegative, got {y}")
    if y == 0:
        return 0.0
    lhs = math.exp(l1 * y) / (l1 - l0)

    def g(theta: float) -> float:
        return _eq2_integral(l0, l1, theta, tol) - lhs

    hi = 0.5
    while g(hi) <= 0:
        hi = 1.0 - 0.5 * (1.0 - hi)
        if 1.0 - hi < 1e-12:
            raise BracketError(f"theta_star: no root below 1 for y={y}")
    return find_root_monotone(g, 0.0, hi, tol).x


def ld_objective(params: ModelParams, y: float, theta: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Bracketed expression whose supremum over ``theta in (0,1)`` is ``L(y)``."""
    l0, l1, mu = _rates(params)
    if theta == 0.0:
        return 0.0
    inner = integrate_0_inf(
        lambda s: np.exp((l0 - l1) * s) / (1.0 - theta * np.exp(-l1 * s)),
        _sub_rate(l0, l1), tol,
    )
    return mu * theta * math.exp(y * l1) / (l1 - l0) - mu * theta * inner


def ld_rate_solution(params: ModelParams, y: float, tol: Tolerances = DEFAULT_TOL):
    """Maximize the rate objective; returns the :class:`numerics.Maximum`."""
    if y < 0:
        raise ValueError(f"y must be nonnegative, got {y}")
    best = maximize_1d(lambda th: ld_objective(params, y, th, tol), 0.0, 1.0, tol)
    if best.boundary == "hi":
        raise ConvergenceError(f"rate objective maximized at theta -> 1 for y={y}; parameters pathological?")
    return best


def ld_rate(params: ModelParams, y: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Large-deviation rate ``L(y)`` of the early-recurrence event.

    The optimizer's maximizer is checked against :func:`theta_star`; a
    disagreement above ``FOC_TOL`` raises.
    """
    best = ld_rate_solution(params, y, tol)
    th = theta_star(params, y, tol)
    if abs(best.x - th) > FOC_TOL:
        raise ConvergenceError(
            f"rate maximizer {best.x!r} disagrees with theta_star {th!r} at y={y}"
        )
    return max(best.value, 0.0)


def clones_uncond_limit(params: ModelParams) -> float:
    """Scaled expected clone count ``-mu/lambda0``.

    A plug-in constant: only ``lambda0 < 0`` is required, so ``mu = 0``
    gives 0 rather than a validation error.
    """
    if not params.lambda0 < 0:
        raise ParameterError("lambda0<0", f"lambda0 must be negative, got {params.lambda0}")
    return -params.mu / params.lambda0


def _clones_cond_integral(l0: float, l1: float, theta: float, tol: Tolerances) -> float:
    return integrate_0_inf(
        lambda s: np.exp(l0 * s) / (1.0 - theta * np.exp(-l1 * s)), _sub_rate(l0, l1), tol
    )


def clones_cond_limit(params: ModelParams, y: float, tol: Tolerances = DEFAULT_TOL,
                      theta: Optional[float] = None) -> float:
    """Scaled expected clone count given early recurrence by ``y``."""
    l0, l1, mu = _rates(params)
    th = theta_star(params, y, tol) if theta is None else theta
    return mu * _clones_cond_integral(l0, l1, th, tol)


@dataclass(frozen=True)
class WindowConstants:
    t1: float
    t2: float
    delta_star: float
    kappa_star: float
    valid: bool  # window short enough for the clone-count concentration result


def window_condition(params: ModelParams, theta: float) -> float:
    """Longest admissible window length ``log(2 - theta)/lambda1``."""
    return -math.log(1.0 / (2.0 - theta)) / params.lambda1


def window_constants(params: ModelParams, y: float, t1: float, t2: float,
                     tol: Tolerances = DEFAULT_TOL, theta: Optional[float] = None) -> WindowConstants:
    """Conditional inflation of window mutant mass (delta*) and clone count (kappa*)."""
    l0, l1, _ = _rates(params)
    if not 0 <= t1 < t2:
        raise ValueError(f"window must satisfy 0 <= t1 < t2, got ({t1}, {t2})")
    th = theta_star(params, y, tol) if theta is None else theta
    # integrate in r = s - t1 to keep the short-window case well conditioned
    mass = integrate(
        lambda r: np.exp((l0 - l1) * (t1 + r)) / (1.0 - th * np.exp(-l1 * (t1 + r))) ** 2,
        0.0, t2 - t1, tol,
    )
    mass0 = integrate(lambda r: np.exp((l0 - l1) * (t1 + r)), 0.0, t2 - t1, tol)
    count = integrate(
        lambda r: np.exp(l0 * (t1 + r)) / (1.0 - th * np.exp(-l1 * (t1 + r))), 0.0, t2 - t1, tol
    )
    count0 = integrate(lambda r: np.exp(l0 * (t1 + r)), 0.0, t2 - t1, tol)
    return WindowConstants(
        t1, t2, mass / mass0 - 1.0, count / count0 - 1.0, (t2 - t1) < window_condition(params, th)
    )


def window_mean_count(params: ModelParams, t1: float, t2: float) -> float:
    """Unconditional expected number of clones founded in ``(t1, t2)``."""
    l0, _, mu = _rates(params)
    return mu * params.scale * (math.exp(l0 * t2) - math.exp(l0 * t1)) / l0


def simpson_uncond_limit(params: ModelParams) -> float:
    l0, l1, mu = _rates(params)
    return 2.0 * (l1 - l0) ** 2 / (mu * (2.0 * l1 - l0))


def simpson_cond_limit(params: ModelParams, y: float, tol: Tolerances = DEFAULT_TOL,
                       theta: Optional[float] = None) -> float:
    """Scaled Simpson's Index limit given early recurrence (base model only)."""
    l0, l1, mu = _rates(params)
    th = theta_star(params, y, tol) if theta is None else theta
    integral = integrate_0_inf(
        lambda s: np.exp(-(2.0 * l1 - l0) * s) / (1.0 - th * np.exp(-l1 * s)) ** 3,
        _sub_rate(l0, l1), tol,
    )
    return 2.0 * (l1 - l0) ** 2 / mu * math.exp(-2.0 * l1 * y) * integral


def mgf_span_boundary(r1: float, d1: float, t: float) -> float:
    lam = r1 - d1
    g = math.exp(lam * t)
    return math.log((r1 * g - d1) / (r1 * g - r1))


def mgf_birth_death(r1: float, d1: float, t: float, theta: float) -> float:
    """MGF of a binary birth-death process at time ``t`` started from one cell.

    Returns ``math.inf`` at or beyond the span boundary.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if theta >= mgf_span_boundary(r1, d1, t):
        return math.inf
    lam = r1 - d1
    em = math.exp(-lam * t)
    et = math.exp(theta)
    num = d1 * math.expm1(theta) - em * (r1 * et - d1)
    den = r1 * math.expm1(theta) - em * (r1 * et - d1)
    return num / den


def yule_moments(lambda1: float, t: float, k: int) -> float:
    """Raw ``k``-th moment (k = 1..4) of a Yule process started from one cell."""
    g = math.exp(lambda1 * t)
    q = 1.0 / g
    if k == 1:
        return g
    if k == 2:
        return g**2 * (2.0 - q)
    if k == 3:
        return g**3 * (6.0 - 6.0 * q + q**2)
    if k == 4:
        return g**4 * (24.0 - 36.0 * q + 14.0 * q**2 - q**3)
    raise ValueError(f"k must be 1, 2, 3 or 4, got {k}")


@dataclass
class AnalyticReport:
    y: float
    zeta: float
    theta_star: float
    ld_rate: float
    poisson_mean: float
    clones_uncond_limit: float
    clones_cond_limit: float
    simpson_uncond_limit: float
    simpson_cond_limit: float
    windows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self, digits: int = 12) -> dict:
        def rnd(v):
            if isinstance(v, bool) or not isinstance(v, float):
                return v
            return float(f"{v:.{digits}g}")

        out = {}
        for k, v in asdict(self).items():
            if k == "windows":
                out[k] = [{kk: rnd(vv) for kk, vv in w.items()} for w in v]
            else:
                out[k] = rnd(v)
        return out


def analytic_report(params: ModelParams, y: float,
                    windows: Iterable[Sequence[float]] = (),
                    tol: Tolerances = DEFAULT_TOL) -> AnalyticReport:
    """Every closed-form constant for one parameter set and one ``y``."""
    validate(params)
    th = theta_star(params, y, tol)
    best = ld_rate_solution(params, y, tol)
    if abs(best.x - th) > FOC_TOL:
        raise ConvergenceError(f"rate maximizer {best.x!r} disagrees with theta_star {th!r} at y={y}")
    notes = []
    if not params.deterministic or params.d1 != 0:
        notes.append(
            "simpson_cond_limit is proven for the base model only "
            "(deterministic sensitive pool, pure-birth clones)"
        )
    return AnalyticReport(
        y=float(y),
        zeta=zeta(params, tol),
        theta_star=th,
        ld_rate=max(best.value, 0.0),
        poisson_mean=poisson_mean(params, tol),
        clones_uncond_limit=clones_uncond_limit(params),
        clones_cond_limit=clones_cond_limit(params, y, tol, theta=th),
        simpson_uncond_limit=simpson_uncond_limit(params),
        simpson_cond_limit=simpson_cond_limit(params, y, tol, theta=th),
        windows=[asdict(window_constants(params, y, t1, t2, tol, theta=th)) for t1, t2 in windows],
        notes=notes,
    )


__all__ = [
    "AnalyticReport", "WindowConstants", "NumericalError", "analytic_report", "clones_cond_limit",
    "clones_uncond_limit", "ld_objective", "ld_rate", "ld_rate_solution", "mgf_birth_death",
    "mgf_span_boundary", "poisson_clone_pmf", "poisson_mean", "simpson_cond_limit",
    "simpson_uncond_limit", "theta_star", "window_condition", "window_constants",
    "window_mean_count", "yule_moments", "z1_mean", "zeta",
]
