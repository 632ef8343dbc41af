"""Compare the compiled and pure-Python event loops.

Runs the same replicate streams through both backends, checks the outcomes
are bit-identical and reports events per second.

    python benchmarks/bench_kernel.py --reps 20
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from clonal_recur import BASE_PARAMS, FIG1_PARAMS
from clonal_recur.simulate import StopRule, simulate_one
from clonal_recur.simulate import kernel

CASES = {
    "fig1 stochastic, to recurrence": (FIG1_PARAMS, StopRule.recurrence()),
    "base deterministic, to recurrence": (BASE_PARAMS, StopRule.recurrence()),
    "base deterministic n=1e4, to recurrence": (BASE_PARAMS.replace(n=10_000), StopRule.recurrence()),
}


def _run(backend: str, params, stop, reps: int, seed: int):
    kernel.run_kernel = kernel.KERNELS[backend]
    t0 = time.perf_counter()
    outs = [simulate_one(params, stop, (seed, i)) for i in range(reps)]
    elapsed = time.perf_counter() - t0
    events = sum(sum(o.counters.values()) for o in outs)
    return outs, elapsed, events


def _same(a, b) -> bool:
    return (a.recurrence_time == b.recurrence_time and a.z0_final == b.z0_final
            and np.array_equal(a.birth_times, b.birth_times) and np.array_equal(a.sizes, b.sizes))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args(argv)
    if "cython" not in kernel.KERNELS:
        print("compiled kernel not built; nothing to compare")
        return 1
    original = kernel.run_kernel
    print(f"{'case':42s} {'python ev/s':>12s} {'cython ev/s':>12s} {'speedup':>8s}  identical")
    try:
        for name, (params, stop) in CASES.items():
            py, t_py, ev = _run("python", params, stop, args.reps, args.seed)
            cy, t_cy, _ = _run("cython", params, stop, args.reps, args.seed)
            same = all(_same(a, b) for a, b in zip(py, cy))
            print(f"{name:42s} {ev / t_py:12.3e} {ev / t_cy:12.3e} {t_py / t_cy:8.1f}x  {same}")
    finally:
        kernel.run_kernel = original
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
