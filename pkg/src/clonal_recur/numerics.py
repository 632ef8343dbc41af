"""Scalar numerics: adaptive quadrature, bracketed root finding, 1-D maximization.

Integrands passed to :func:`integrate` and :func:`integrate_0_inf` must accept
numpy arrays.  Scalar callbacks for the root finder and the maximizer take and
return plain floats.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

_EPS = np.finfo(float).eps


class NumericalError(ArithmeticError):
    """Base class for failures of the scalar numerics."""


class QuadratureError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


@dataclass(frozen=True)
class Tolerances:
    quad_rel: float = 1e-10
    root_abs: float = 1e-12
    opt_abs: float = 1e-10
    max_iter: int = 200

    def __post_init__(self) -> None:
        for name in ("quad_rel", "root_abs", "opt_abs"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def tightened(self, factor: float = 0.5) -> "Tolerances":
        return Tolerances(
            self.quad_rel * factor, self.root_abs * factor, self.opt_abs * factor, self.max_iter * 2
        )


DEFAULT_TOL = Tolerances()

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (non-negative half).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# Gauss weights for the nodes _XGK[1], _XGK[3], _XGK[5], _XGK[7].
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]


def _gk15(f: Callable, a: float, b: float) -> tuple[float, float, float]:
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _NODES
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError(f"integrand is not finite on [{a!r}, {b!r}]")
    k = half * float(_WK @ fx)
    g = half * float(_WG15 @ fx)
    kabs = abs(half) * float(_WK @ np.abs(fx))
    return k, abs(k - g), kabs


def integrate(f: Callable, a: float, b: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Globally adaptive Gauss-Kronrod (7/15) quadrature of ``f`` over ``[a, b]``.

    The open rule never evaluates the endpoints, so integrable endpoint
    behaviour (``u -> 0`` after compactification) is harmless.
    """
    if a == b:
        return 0.0
    if not (math.isfinite(a) and math.isfinite(b)):
        raise QuadratureError("integrate needs finite limits; use integrate_0_inf")
    k, err, kabs = _gk15(f, a, b)
    heap = [(-err, a, b, k, kabs)]
    total, total_err, total_abs = k, err, kabs
    for _ in range(tol.max_iter):
        if total_err <= max(tol.quad_rel * abs(total), 50.0 * _EPS * total_abs):
            return total
        neg_err, lo, hi, k, kabs = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        k1, e1, a1 = _gk15(f, lo, mid)
        k2, e2, a2 = _gk15(f, mid, hi)
        total += k1 + k2 - k
        total_err += e1 + e2 + neg_err
        total_abs += a1 + a2 - kabs
        heapq.heappush(heap, (-e1, lo, mid, k1, a1))
        heapq.heappush(heap, (-e2, mid, hi, k2, a2))
        # refresh the running sums to keep cancellation error out of the test
        if len(heap) % 32 == 0:
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(-item[0] for item in heap)
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    if total_err <= max(tol.quad_rel * abs(total), 50.0 * _EPS * total_abs):
        return total
    raise QuadratureError(
        f"no convergence after {tol.max_iter} subdivisions "
        f"(estimate {total!r}, error {total_err:.3g})"
    )


def integrate_0_inf(f: Callable, rate: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """Integrate ``f`` over ``[0, inf)`` after the substitution ``u = exp(-rate*s)``.

    The transformed integrand is ``f(-log(u)/rate) / (rate*u)`` on ``(0, 1]``.
    For an integrand decaying like ``exp(-c*s)`` it behaves like
    ``u**(c/rate - 1)`` near ``u = 0``, so pick ``rate <= c`` to keep it
    bounded.
    """
    if not rate > 0:
        raise QuadratureError(f"substitution rate must be positive, got {rate!r}")

    def g(u):
        s = -np.log(u) / rate
        return f(s) / (rate * u)

    return integrate(g, 0.0, 1.0, tol)


class Root(NamedTuple):
    x: float
    lo: float
    hi: float
    iterations: int


def find_root_monotone(
    g: Callable[[float], float], lo: float, hi: float, tol: Tolerances = DEFAULT_TOL
) -> Root:
    """Brent's method: bisection safeguarded by secant/inverse-quadratic steps.

    Returns the best estimate ``x`` together with a final bracket
    ``[lo, hi]`` (sorted) on whose endpoints ``g`` has opposite signs (or
    vanishes), of width at most about ``tol.root_abs``.
    """
    a, b = float(lo), float(hi)
    fa, fb = g(a), g(b)
    if math.isnan(fa) or math.isnan(fb):
        raise BracketError("function is NaN at the bracket endpoints")
    if fa == 0.0:
        return Root(a, a, a, 0)
    if fb == 0.0:
        return Root(b, b, b, 0)
    if (fa > 0) == (fb > 0):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]: g(lo)={fa!r}, g(hi)={fb!r}")
    c, fc = a, fa
    d = e = b - a
    for it in range(1, tol.max_iter + 1):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * tol.root_abs
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return Root(b, min(b, c), max(b, c), it)
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = xm
        else:
            d = e = xm
        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = g(b)
        if math.isnan(fb):
            raise ConvergenceError(f"function returned NaN at x={b!r}")
    raise ConvergenceError(f"root not isolated within {tol.max_iter} iterations")


class Maximum(NamedTuple):
    x: float
    value: float
    boundary: Optional[str]  # None, "lo" or "hi"


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def maximize_1d(
    h: Callable[[float], float],
    lo: float,
    hi: float,
    tol: Tolerances = DEFAULT_TOL,
    verify_grid: int = 0,
) -> Maximum:
    """Golden-section search for the maximum of a unimodal ``h`` on ``(lo, hi)``.

    When the bracket collapses onto one of the original endpoints the
    endpoint is returned with ``boundary`` set to ``"lo"`` or ``"hi"``.  The
    value there is ``h(endpoint)`` when finite, otherwise the last interior
    value.  ``verify_grid > 0`` cross-checks the result against a scan of
    that many interior grid points.
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = h(c), h(d)
    moved_lo = moved_hi = False
    it = 0
    while b - a > tol.opt_abs:
        it += 1
        if it > tol.max_iter:
            raise ConvergenceError(f"golden-section search did not converge in {tol.max_iter} steps")
        if fc >= fd:
            b, moved_hi = d, True
            d, fd = c, fc
            c = b - _INVPHI * (b - a)
            fc = h(c)
        else:
            a, moved_lo = c, True
            c, fc = d, fd
            d = a + _INVPHI * (b - a)
            fd = h(d)
    x, fx = (c, fc) if fc >= fd else (d, fd)
    boundary = None
    if not moved_lo:
        boundary = "lo"
    elif not moved_hi:
        boundary = "hi"
    if boundary is not None:
        edge = lo if boundary == "lo" else hi
        try:
            fe = h(edge)
        except (ZeroDivisionError, ArithmeticError, ValueError):
            fe = math.nan
        x, fx = edge, (fe if math.isfinite(fe) else fx)
    if verify_grid:
        grid = lo + (hi - lo) * (np.arange(1, verify_grid + 1) / (verify_grid + 1))
        best = max(h(float(t)) for t in grid)
        if best > fx + 1e-9 * (1.0 + abs(fx)):
            raise ConvergenceError(
                f"grid scan found {best!r} above golden-section maximum {fx!r}; objective not unimodal?"
            )
    return Maximum(x, fx, boundary)
