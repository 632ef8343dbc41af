"""Pure-Python event loop; the reference the compiled kernel must match seed-for-seed.

Both kernels consume the bit generator only through ``next_double`` in the
same order, so identical seeds give identical trajectories.  Clone choice
here is a linear scan over cumulative sizes; the compiled kernel uses a
Fenwick tree, which picks the same clone for the same target cell.
"""

from __future__ import annotations

import math

import numpy as np

RECURRED, REACHED_STOP, EXTINCT, EVENT_CAP = 0, 1, 2, 3

_BLOCK = 512


class _Uniforms:
    __slots__ = ("_gen", "_buf", "_i")

    def __init__(self, bitgen):
        self._gen = np.random.Generator(bitgen)
        self._buf = []
        self._i = 0

    def __call__(self) -> float:
        if self._i == len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return u


def _pick(sizes: list, k: int) -> int:
    acc = 0
    for i, s in enumerate(sizes):
        acc += s
        if acc > k:
            return i
    raise AssertionError("target cell beyond total population")


def run_kernel(bitgen, stochastic, r0, d0, mrate, r1, d1, lambda0, n,
               threshold, t_stop, stop_on_recurrence, initial_clones, max_events):
    """Simulate one trajectory; see ``simulate.kernel`` for the contract."""
    u = _Uniforms(bitgen)
    log = math.log
    sizes = [1] * initial_clones
    births = [0.0] * initial_clones
    z1 = initial_clones
    t = 0.0
    gamma = math.nan
    status = REACHED_STOP
    sb = sd = nm = rb = rd = 0
    events = 0
    rsum = r1 + d1

    if stochastic:
        z0 = int(n)
        while True:
            a0 = (r0 + d0 + mrate) * z0
            a1 = rsum * z1
            total = a0 + a1
            if total == 0.0:
                status = EXTINCT
                break
            tn = t - log(1.0 - u()) / total
            if tn >= t_stop:
                t = t_stop
                status = REACHED_STOP
                break
            events += 1
            if events > max_events:
                status = EVENT_CAP
                break
            t = tn
            w = u() * total
            if w < a0:
                if w < r0 * z0:
                    z0 += 1
                    sb += 1
                elif w < (r0 + d0) * z0:
                    z0 -= 1
                    sd += 1
                else:
                    sizes.append(1)
                    births.append(t)
                    z1 += 1
                    nm += 1
                    if z1 > threshold and gamma != gamma:
                        gamma = t
                        if stop_on_recurrence:
                            status = RECURRED
                            break
            else:
                w -= a0
                if w < r1 * z1:
                    k = int(w / r1)
                    if k >= z1:
                        k = z1 - 1
                    i = _pick(sizes, k)
                    sizes[i] += 1
                    z1 += 1
                    rb += 1
                    if z1 > threshold and gamma != gamma:
                        gamma = t
                        if stop_on_recurrence:
                            status = RECURRED
                            break
                else:
                    k = int((w - r1 * z1) / d1)
                    if k >= z1:
                        k = z1 - 1
                    i = _pick(sizes, k)
                    sizes[i] -= 1
                    z1 -= 1
                    rd += 1
        z0_final = float(z0)
    else:
        # Mutation epochs by inversion of the cumulative intensity
        # cap * (1 - exp(lambda0 t)), cap = mrate * n / (-lambda0).
        cap = mrate * n / (-lambda0)
        target = -log(1.0 - u())
        tm = log(1.0 - target / cap) / lambda0 if target < cap else math.inf
        while True:
            if z1 > 0:
                tn = t - log(1.0 - u()) / (rsum * z1)
            else:
                tn = math.inf
            if tm <= tn:
                if tm == math.inf:
                    status = EXTINCT
                    break
                if tm >= t_stop:
                    t = t_stop
                    status = REACHED_STOP
                    break
                events += 1
                if events > max_events:
                    status = EVENT_CAP
                    break
                t = tm
                sizes.append(1)
                births.append(t)
                z1 += 1
                nm += 1
                target += -log(1.0 - u())
                tm = log(1.0 - target / cap) / lambda0 if target < cap else math.inf
                if z1 > threshold and gamma != gamma:
                    gamma = t
                    if stop_on_recurrence:
                        status = RECURRED
                        break
            else:
                if tn >= t_stop:
                    t = t_stop
                    status = REACHED_STOP
                    break
                events += 1
                if events > max_events:
                    status = EVENT_CAP
                    break
                t = tn
                w = u() * (rsum * z1)
                if w < r1 * z1:
                    k = int(w / r1)
                    if k >= z1:
                        k = z1 - 1
                    i = _pick(sizes, k)
                    sizes[i] += 1
                    z1 += 1
                    rb += 1
                    if z1 > threshold and gamma != gamma:
                        gamma = t
                        if stop_on_recurrence:
                            status = RECURRED
                            break
                else:
                    k = int((w - r1 * z1) / d1)
                    if k >= z1:
                        k = z1 - 1
                    i = _pick(sizes, k)
                    sizes[i] -= 1
                    z1 -= 1
                    rd += 1
        z0_final = n * math.exp(lambda0 * t)

    return (
        gamma,
        t,
        z0_final,
        np.array(births, dtype=np.float64),
        np.array(sizes, dtype=np.int64),
        np.array([sb, sd, nm, rb, rd], dtype=np.int64),
        status,
    )
